import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from _helpers import dpp_indicator_matrix, random_contraction
from hypertess.berezin import KernelSpec
from hypertess.configuration import Configuration
from hypertess.geometry import ball_volume_dV, distance_from_origin, hyperbolic_distance
from hypertess.samplers import (
    BerezinDPP,
    DiscreteKernel,
    build_discrete_kernel,
    dpp_inclusion_prob,
    sample_dpp,
    sample_poisson,
    sample_radii,
    sample_uniform,
    sinh_power_integral,
    thin,
    translated_lattice,
)
from hypertess.tessellation import build_net


# --- Poisson and uniform ----------------------------------------------------


def test_poisson_tiny_intensity_is_empty():
    rng = np.random.default_rng(0)
    assert sum(len(sample_poisson(1e-9, 2.0, 2, rng)) for _ in range(100)) == 0


def test_poisson_errors():
    with pytest.raises(ValueError):
        sample_poisson(0.0, 2.0)
    with pytest.raises(ValueError):
        sample_poisson(1.0, -1.0)


def test_poisson_counts_quick():
    rng = np.random.default_rng(1)
    counts = np.array([len(sample_poisson(1.0, 4.0, 2, rng)) for _ in range(400)])
    mu = np.sinh(2.0) ** 2
    assert abs(counts.mean() - mu) <= 3 * np.sqrt(mu / len(counts))
    assert 0.8 <= counts.var(ddof=1) / counts.mean() <= 1.2


@pytest.mark.parametrize("d", [2, 3, 4])
def test_uniform_radii_follow_volume_law(d):
    R = 3.0
    r = sample_radii(5000, R, d, rng=d)
    assert np.all((r >= 0) & (r <= R))
    cdf = lambda t: np.array([ball_volume_dV(x, d) for x in np.atleast_1d(t)]) / ball_volume_dV(R, d)
    assert stats.kstest(r, cdf).pvalue > 1e-3


def test_sample_uniform_directions_isotropic():
    cfg = sample_uniform(20000, 3.0, 3, rng=2)
    u = cfg.points / np.linalg.norm(cfg.points, axis=1)[:, None]
    assert np.all(np.abs(u.mean(axis=0)) < 4 / np.sqrt(3 * 20000))


def test_sinh_power_integral_matches_quadrature():
    from scipy.integrate import quad

    for n in range(0, 6):
        assert sinh_power_integral(2.3, n) == pytest.approx(quad(lambda t: np.sinh(t) ** n, 0, 2.3)[0], rel=1e-12)


def test_poisson_disjoint_regions_uncorrelated():
    rng = np.random.default_rng(4)
    a, b = [], []
    for _ in range(1000):
        r = distance_from_origin(sample_poisson(1.0, 4.0, 2, rng).points)
        a.append(np.sum(r < 2.5))
        b.append(np.sum(r >= 2.5))
    a, b = np.array(a, float), np.array(b, float)
    cov = np.cov(a, b)[0, 1]
    se = np.std((a - a.mean()) * (b - b.mean()), ddof=1) / np.sqrt(len(a))
    assert abs(cov) <= 3 * se


def test_sampler_determinism():
    assert sample_poisson(1.0, 3.0, 2, rng=9) == sample_poisson(1.0, 3.0, 2, rng=9)


# --- thinning ---------------------------------------------------------------


def test_thin_examples():
    cfg = sample_uniform(1000, 4.0, 2, rng=0)
    assert thin(cfg, 0.0, rng=1) == cfg
    assert len(thin(cfg, 1.0, rng=1)) == 0
    assert abs(len(thin(cfg, 0.5, rng=1)) - 500) <= 3 * np.sqrt(250)
    with pytest.raises(ValueError):
        thin(cfg, 1.5)


def test_thinned_poisson_is_poisson():
    rng = np.random.default_rng(6)
    counts = np.array([len(thin(sample_poisson(2.0, 3.0, 2, rng), 0.3, rng)) for _ in range(600)])
    mu = 0.7 * 2.0 * ball_volume_dV(3.0, 2)
    assert abs(counts.mean() - mu) <= 3 * np.sqrt(mu / len(counts))
    assert 0.8 <= counts.var(ddof=1) / counts.mean() <= 1.2


# --- translated lattice -----------------------------------------------------


@pytest.fixture(scope="module")
def small_net():
    return build_net(3.0, 0.7, rng=0)


def test_translated_lattice_examples(small_net):
    cfg = translated_lattice(small_net, 0.0, rng=0)
    np.testing.assert_array_equal(cfg.points, small_net.nuclei_)
    cfg2, L = translated_lattice(small_net, 0.4, rng=1, return_lengths=True)
    assert len(cfg2) == small_net.n_cells_
    disp = hyperbolic_distance(small_net.nuclei_, cfg2.points)
    np.testing.assert_allclose(disp, L, rtol=1e-7, atol=1e-9)
    with pytest.raises(ValueError):
        translated_lattice(small_net, -1.0)


@pytest.mark.parametrize("tail", [1.0, 2.0])
def test_translated_lattice_mean_displacement(small_net, tail):
    from math import gamma

    disp = []
    for seed in range(10):
        cfg = translated_lattice(small_net, 0.3, tail=tail, rng=seed)
        disp.append(hyperbolic_distance(small_net.nuclei_, cfg.points))
    disp = np.concatenate(disp)
    mean_law = 0.3 * gamma(1 + 1 / tail)
    assert abs(disp.mean() - mean_law) <= 3 * disp.std(ddof=1) / np.sqrt(disp.size)


# --- discrete kernel and DPP -------------------------------------------------


def test_discrete_kernel_examples():
    seeds = sample_uniform(500, 4.0, 2, rng=0)
    K = build_discrete_kernel(seeds, KernelSpec(2, 1.0))
    w = ball_volume_dV(4.0, 2) / 500
    np.testing.assert_allclose(np.diag(K.matrix), w / np.pi, rtol=1e-10)
    np.testing.assert_allclose(K.matrix, K.matrix.T, atol=1e-12)
    assert K.top_eigenvalue() <= 1 + 1e-6
    assert K.trace() <= K.n
    assert np.all((K.eigenvalues >= 0) & (K.eigenvalues <= 1))


def test_discrete_kernel_monte_carlo_weights():
    seeds = sample_uniform(200, 3.0, 2, rng=1)
    K = build_discrete_kernel(seeds, KernelSpec(2, 3.0), weights="monte-carlo", rng=2, n_mc=50000)
    assert K.weights.sum() == pytest.approx(ball_volume_dV(3.0, 2), rel=1e-12)
    with pytest.raises(ValueError):
        build_discrete_kernel(seeds, KernelSpec(3, 1.0))


def test_clip_warning():
    with pytest.warns(RuntimeWarning):
        K = DiscreteKernel.from_matrix(np.diag([1.5, 0.5]))
    assert K.clip_magnitude == pytest.approx(0.5)
    assert np.max(K.eigenvalues) == 1.0


def test_dpp_trivial_kernels():
    assert sample_dpp(DiscreteKernel.from_matrix(np.zeros((5, 5))), rng=0).size == 0
    np.testing.assert_array_equal(sample_dpp(DiscreteKernel.from_matrix(np.eye(5)), rng=0), np.arange(5))


def test_inclusion_prob_examples():
    K = DiscreteKernel.from_matrix(random_contraction(6, 0))
    M = K.matrix
    assert dpp_inclusion_prob(K, []) == 1.0
    assert dpp_inclusion_prob(K, [2]) == pytest.approx(M[2, 2])
    assert dpp_inclusion_prob(K, [1, 4]) == pytest.approx(M[1, 1] * M[4, 4] - M[1, 4] ** 2)
    with pytest.raises(IndexError):
        dpp_inclusion_prob(K, [7])


@given(st.integers(2, 10), st.integers(0, 10**6))
def test_dpp_sample_is_valid_subset(n, seed):
    K = DiscreteKernel.from_matrix(random_contraction(n, seed))
    S = sample_dpp(K, seed)
    assert np.all(np.diff(S) > 0) and np.all((S >= 0) & (S < n))


@pytest.fixture(scope="module")
def dpp_draws():
    K = DiscreteKernel.from_matrix(random_contraction(8, 11))
    return K, dpp_indicator_matrix(K, 4000, 12)


def test_dpp_marginals_quick(dpp_draws):
    K, Z = dpp_draws
    p = Z.mean(axis=0)
    se = np.sqrt(np.diag(K.matrix) * (1 - np.diag(K.matrix)) / len(Z))
    assert np.all(np.abs(p - np.diag(K.matrix)) <= 4 * se)


def test_dpp_cardinality_is_trace(dpp_draws):
    K, Z = dpp_draws
    card = Z.sum(axis=1)
    assert abs(card.mean() - K.trace()) <= 4 * card.std(ddof=1) / np.sqrt(len(card))


def test_dpp_negative_association(dpp_draws):
    K, Z = dpp_draws
    A, B = Z[:, :4].sum(axis=1).astype(float), Z[:, 4:].sum(axis=1).astype(float)
    prod = (A - A.mean()) * (B - B.mean())
    assert np.cov(A, B)[0, 1] <= 3 * prod.std(ddof=1) / np.sqrt(len(A))
    # exact covariance of block counts is -sum_{i in A, j in B} K_ij^2
    assert -np.sum(K.matrix[:4, 4:] ** 2) <= 0


def test_dpp_vacancy_bound(dpp_draws):
    K, Z = dpp_draws
    W = [0, 1, 2]
    vac = np.mean(Z[:, W].sum(axis=1) == 0)
    bound = np.exp(-np.trace(K.matrix[np.ix_(W, W)]))
    assert vac <= bound + 3 * np.sqrt(bound * (1 - bound) / len(Z))
    # the exact vacancy det(I - K_W) obeys the same bound
    assert np.linalg.det(np.eye(3) - K.matrix[np.ix_(W, W)]) <= bound


def test_berezin_dpp_estimator():
    est = BerezinDPP(d=2, s=3.0, window_radius=2.0, n_seeds=300, random_state=0).fit()
    assert est.get_params()["s"] == 3.0
    a = est.sample(random_state=5)
    b = est.sample(random_state=5)
    assert isinstance(a, Configuration) and a == b
    assert est.kernel_.normalization == pytest.approx(np.pi / 4)
    with pytest.raises(AttributeError):
        BerezinDPP().sample()
