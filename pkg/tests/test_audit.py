import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypertess.audit import (
    audit_animals,
    boundary_out,
    cell_counts,
    density_ratio,
    expansion_scan,
    internal_volume_ratio,
    lemma_connectivity,
    p_exp_stats,
    sample_animal,
    vacancy_ratio,
)
from hypertess.configuration import Configuration
from hypertess.geometry import distance_from_origin
from hypertess.samplers import sample_poisson, thin
from hypertess.tessellation import build_net, delaunay_graph


@pytest.fixture(scope="module")
def net():
    return build_net(5.0, 0.7, rng=0)


@pytest.fixture(scope="module")
def anchor(net):
    return int(net.cell_of(np.zeros((1, 2)))[0])


@pytest.fixture(scope="module")
def poisson5():
    return sample_poisson(1.0, 5.0, 2, rng=1)


def empty_cfg():
    return Configuration(np.zeros((0, 2)), 2, 5.0)


# --- animals ----------------------------------------------------------------


def test_sample_animal_examples(net, anchor):
    assert sample_animal(net, anchor, 1, rng=0) == frozenset({anchor})
    with pytest.raises(ValueError):
        sample_animal(net, anchor, net.n_cells_ + 1)
    with pytest.raises(ValueError):
        sample_animal(net, anchor, 3, strategy="greedy-adversarial")
    with pytest.raises(ValueError):
        sample_animal(net, -5, 3)


@settings(max_examples=30)
@given(st.integers(1, 60), st.integers(0, 10**6), st.sampled_from(["bfs", "greedy-adversarial"]))
def test_sample_animal_connected(net, anchor, n, seed, strategy):
    obj = (lambda J: -len(boundary_out(J, net))) if strategy != "bfs" else None
    J = sample_animal(net, anchor, n, seed, strategy, objective=obj)
    assert len(J) == n and anchor in J
    assert nx.is_connected(net.face_graph_.subgraph(J))


def test_adversarial_density_beats_bfs(net, anchor, poisson5):
    counts = cell_counts(poisson5, net)
    obj = lambda J: density_ratio(None, J, counts=counts)
    wins = 0
    for seed in range(30):
        a = obj(sample_animal(net, anchor, 15, np.random.default_rng(seed), "greedy-adversarial", objective=obj))
        b = obj(sample_animal(net, anchor, 15, np.random.default_rng(seed), "bfs"))
        wins += a >= b
    assert wins > 15


# --- ratios -----------------------------------------------------------------


def test_density_examples(net, anchor):
    J = sample_animal(net, anchor, 10, rng=0)
    assert density_ratio(empty_cfg(), J, net) == 0.0
    one_each = Configuration(net.nuclei_[sorted(J)], 2, 5.0)
    assert density_ratio(one_each, J, net) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        density_ratio(one_each, [], net)


def test_density_mean_is_intensity_times_cell_volume(net):
    # averaged over random single-cell animals, E[count] = lambda * Vol(window) / n_cells
    from hypertess.geometry import ball_volume_dV

    rng = np.random.default_rng(2)
    core = net.core_cells(1.0)
    vals = []
    for seed in range(40):
        cfg = sample_poisson(1.0, 5.0, 2, rng)
        counts = cell_counts(cfg, net)
        vals.extend(counts[core])
    vals = np.array(vals, float)
    expected = ball_volume_dV(5.0, 2) / net.n_cells_
    assert abs(vals.mean() - expected) <= 4 * vals.std(ddof=1) / np.sqrt(len(vals)) + 0.15 * expected


def test_vacancy_examples(net, anchor):
    J = sample_animal(net, anchor, 5, rng=0)
    every = Configuration(net.nuclei_, 2, 5.0)
    assert vacancy_ratio(every, J, 0, net) == pytest.approx(1.0)
    assert vacancy_ratio(empty_cfg(), [anchor], 1, net) == 0.0
    with pytest.raises(ValueError):
        vacancy_ratio(every, J, -1, net)
    with pytest.raises(ValueError):
        vacancy_ratio(every, J, 40, net)


def test_p_exp_examples(net, anchor):
    x = net.nuclei_[anchor]
    single = Configuration(x[None, :], 2, 5.0)
    assert p_exp_stats(single, [anchor], 2, 1, net)[0] == pytest.approx(1.0)
    every = Configuration(net.nuclei_, 2, 5.0)
    J = sample_animal(net, anchor, 12, rng=3)
    _, qv = p_exp_stats(every, J, 1, 1.0, net)
    assert qv <= np.exp(net.cell_diameter_)
    pd, qv = p_exp_stats(empty_cfg(), J, 1, 1, net)
    assert pd == 0 and qv == np.inf
    with pytest.raises(ValueError):
        p_exp_stats(every, J, 0.5, 1, net)


# --- boundaries and expansion ------------------------------------------------


def test_boundary_examples():
    G = nx.path_graph(6)
    assert boundary_out(range(6), G) == set()
    assert boundary_out([2], G) == {2}
    assert boundary_out([1, 2, 3], G, "edge") == {(0, 1), (3, 4)}
    with pytest.raises(ValueError):
        boundary_out([1], G, "face")


@given(st.integers(0, 10**6))
def test_edge_boundary_dominates_vertex_boundary(seed):
    G = nx.gnp_random_graph(30, 0.15, seed=seed)
    rng = np.random.default_rng(seed)
    V = set(rng.choice(30, size=int(rng.integers(1, 30)), replace=False).tolist())
    assert len(boundary_out(V, G, "edge")) >= len(boundary_out(V, G))


def test_internal_volume_examples(poisson5):
    assert internal_volume_ratio([0, 2, 4], nx.path_graph(6)) == 0.0
    assert internal_volume_ratio([0, 1, 2], nx.complete_graph(3)) == 2.0
    G = delaunay_graph(poisson5)
    mean_deg = G.degrees().mean()
    rng = np.random.default_rng(0)
    for _ in range(10):
        V = sample_animal(G.graph, 0, int(rng.integers(1, 40)), rng)
        assert internal_volume_ratio(V, G) <= 2 * mean_deg


def test_expansion_scan_trivial_graphs():
    prof = expansion_scan(nx.complete_graph(8), 0, 7, trials=3, rng=0)
    np.testing.assert_allclose(prof.min_ratio, 1.0)
    path = nx.path_graph(201)
    prof = expansion_scan(path, 100, 50, trials=3, rng=0)
    np.testing.assert_allclose(prof.min_ratio[1:], 2.0 / prof.sizes[1:])
    assert prof.to_dict()["max_size"] == 50


def test_expansion_scan_on_poisson_delaunay(poisson5):
    G = delaunay_graph(poisson5)
    core = set(np.flatnonzero(distance_from_origin(poisson5.points) <= 3.0).tolist())
    anchor = int(np.argmin(distance_from_origin(poisson5.points)))
    prof = expansion_scan(G, anchor, 200, trials=5, rng=0, allowed=core)
    assert prof.capped and prof.overall_min > 0
    for size, V in prof.witnesses.items():
        assert anchor in V and len(V) == size and nx.is_connected(G.graph.subgraph(V))
        assert len(boundary_out(V, G)) / size == pytest.approx(prof.min_ratio[size - 1])


# --- batch audit -------------------------------------------------------------


def test_audit_animals_shape(net, poisson5):
    stats = audit_animals(poisson5, net, 30, 20, 1, 1, 1, rng=0)
    assert len(stats) == 30
    for s in stats:
        assert s.anchor in s.cells and 1 <= s.size <= 20
        assert s.density_ratio >= 0 and s.vacancy_ratio >= 0 and s.boundary_ratio >= 0
        assert set(s.row()) >= {"size", "density_ratio", "vacancy_ratio", "p_density", "q_vacancy",
                                "boundary_ratio", "seed"}
    assert {s.strategy for s in stats} == {"bfs", "max-density", "min-vacancy"}


def test_audit_default_M_needs_room(net, poisson5):
    # lambda = 1 asks for M = 4 hops, but the origin cell is only 3 hops from the edge of this core
    with pytest.raises(ValueError, match="window too small"):
        audit_animals(poisson5, net, 5, 5, None, rng=0, intensity=1.0)


def test_audit_animals_deterministic(net, poisson5):
    a = audit_animals(poisson5, net, 12, 10, 1, rng=5)
    b = audit_animals(poisson5, net, 12, 10, 1, rng=5)
    assert [s.row() for s in a] == [s.row() for s in b]


def test_thinning_keeps_ratios_finite(net):
    # M = 2 hop balls hold about 26 cells, i.e. several expected points at these intensities
    cfg = sample_poisson(8.0, 5.0, 2, rng=3)
    th = thin(cfg, 0.5, rng=4)
    for S in (cfg, th):
        stats = audit_animals(S, net, 30, 20, 2, 1, 1, rng=0)
        v = np.array([s.vacancy_ratio for s in stats])
        assert np.all(np.isfinite(v)) and v.min() > 0


def test_lemma_connectivity_random_subsets(net, poisson5):
    G = delaunay_graph(poisson5)
    core = np.flatnonzero(distance_from_origin(poisson5.points) <= 3.0)
    H = G.graph.subgraph(core)
    start = int(core[0])
    rng = np.random.default_rng(1)
    ratios = []
    for _ in range(10):
        S = sample_animal(H, start, int(rng.integers(1, min(30, len(core)))), rng)
        ok, r = lemma_connectivity(sorted(S), poisson5, net, G)
        assert ok
        ratios.append(r)
    assert min(ratios) > 0
