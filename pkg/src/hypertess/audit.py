"""Empirical anchored density/vacancy statistics and anchored-expansion scans.

All suprema and infima over animals are replaced by randomized search, so
every number produced here is a one-sided empirical bound. Cell animals are
connected in the face-adjacency graph of the net (cells sharing a
codimension-1 face); M-neighbourhoods are measured in hops of that graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import networkx as nx
import numpy as np

from .configuration import Configuration
from .geometry import ball_volume_dV, distance_from_origin, hyperbolic_distance
from .tessellation import DelaunayGraph, QuasiLatticeNet, discretize, nearest_index

__all__ = [
    "AnimalStats",
    "ExpansionProfile",
    "sample_animal",
    "density_ratio",
    "vacancy_ratio",
    "p_exp_stats",
    "boundary_out",
    "expansion_scan",
    "internal_volume_ratio",
    "cell_counts",
    "audit_animals",
    "lemma_connectivity",
]


@dataclass
class AnimalStats:
    """Statistics of one animal J (a connected set of cells containing the anchor)."""

    cells: frozenset
    anchor: int
    density_ratio: float
    vacancy_ratio: float
    p_density: float
    q_vacancy: float
    boundary_ratio: float
    M: int
    seed: int = -1
    strategy: str = "bfs"
    flagged: bool = False

    @property
    def size(self) -> int:
        return len(self.cells)

    def row(self) -> dict:
        return {
            "size": self.size,
            "density_ratio": self.density_ratio,
            "vacancy_ratio": self.vacancy_ratio,
            "p_density": self.p_density,
            "q_vacancy": self.q_vacancy,
            "boundary_ratio": self.boundary_ratio,
            "seed": self.seed,
        }


def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def _graph(G) -> nx.Graph:
    if isinstance(G, DelaunayGraph):
        return G.graph
    if isinstance(G, QuasiLatticeNet):
        return G.face_graph_
    return G


# ---------------------------------------------------------------------------
# animals


def sample_animal(net, anchor: int, n: int, rng=None, strategy: str = "bfs",
                  objective: Callable[[frozenset], float] | None = None, n_candidates: int = 12,
                  allowed=None) -> frozenset:
    """Grow a connected set of ``n`` cells containing ``anchor``.

    Parameters
    ----------
    net : QuasiLatticeNet or networkx.Graph
    strategy : {"bfs", "greedy-adversarial"}
        ``"bfs"`` adds a uniformly random frontier cell each step (Eden
        growth). ``"greedy-adversarial"`` evaluates ``objective`` on up to
        ``n_candidates`` random frontier cells and keeps the maximizer.
    allowed : container of int, optional
        Cells the animal may use (default: all).

    Raises:
        ValueError: n < 1, n larger than the reachable cell count, or bad anchor.
    """
    G = _graph(net)
    rng = _rng(rng)
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if anchor not in G:
        raise ValueError(f"anchor {anchor} is not a cell")
    if n > G.number_of_nodes():
        raise ValueError("n exceeds the number of cells in the window")
    if strategy not in ("bfs", "greedy-adversarial"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "greedy-adversarial" and objective is None:
        raise ValueError("greedy-adversarial needs an objective")
    ok = (lambda c: True) if allowed is None else (lambda c: c in allowed)
    J = {int(anchor)}
    frontier = sorted(c for c in G.neighbors(anchor) if ok(c))
    fset = set(frontier)
    while len(J) < n:
        if not frontier:
            raise ValueError("n exceeds the number of reachable cells")
        if strategy == "bfs":
            pos = int(rng.integers(len(frontier)))
        else:
            k = min(n_candidates, len(frontier))
            picks = rng.choice(len(frontier), size=k, replace=False)
            vals = [objective(frozenset(J | {frontier[p]})) for p in picks]
            pos = int(picks[int(np.argmax(vals))])
        c = frontier[pos]
        frontier[pos] = frontier[-1]
        frontier.pop()
        fset.discard(c)
        J.add(c)
        for nb in sorted(G.neighbors(c)):
            if nb not in J and nb not in fset and ok(nb):
                frontier.append(nb)
                fset.add(nb)
    return frozenset(J)


def cell_counts(S, net: QuasiLatticeNet) -> np.ndarray:
    """Number of points of S in each cell of the net."""
    pts = S.points if isinstance(S, Configuration) else np.asarray(S, dtype=float).reshape(-1, net.d)
    if len(pts) == 0:
        return np.zeros(net.n_cells_, dtype=int)
    return np.bincount(net.cell_of(pts), minlength=net.n_cells_)


def density_ratio(S, J, net: QuasiLatticeNet | None = None, counts=None) -> float:
    """|S ∩ (union of J)| / |J|.

    Either ``net`` or precomputed ``counts`` (from :func:`cell_counts`) is needed.
    """
    J = list(J)
    if not J:
        raise ValueError("J must be nonempty")
    if counts is None:
        if net is None:
            raise ValueError("density_ratio needs the net or precomputed counts")
        counts = cell_counts(S, net)
    return float(np.sum(counts[J]) / len(J))


def _check_core(cells, net, margin):
    if margin is None:
        return
    r = distance_from_origin(net.nuclei_[list(cells)])
    if np.any(r > net.window_radius - margin):
        raise ValueError("M-neighbourhood leaves the core window")


def vacancy_ratio(S, J, M: int, net: QuasiLatticeNet, counts=None, core_margin: float | None = 2.0) -> float:
    """Occupied cells within M hops of J, divided by |J|.

    Raises:
        ValueError: empty J, negative M, or an M-neighbourhood leaving the core.
    """
    J = list(J)
    if not J:
        raise ValueError("J must be nonempty")
    if M < 0:
        raise ValueError("M must be >= 0")
    ball = net.hop_ball(J, M)
    _check_core(ball, net, core_margin)
    if counts is None:
        counts = cell_counts(S, net)
    ball = np.fromiter(ball, dtype=int)
    return float(np.count_nonzero(counts[ball]) / len(J))


def _probe_distance_to_S(S_points, net, cells) -> np.ndarray:
    """min over points of S and probes of each cell of the hyperbolic distance."""
    cells = np.asarray(list(cells), dtype=int)
    P = net.probes_[cells].reshape(-1, net.d)
    j = nearest_index(S_points, P)
    dist = hyperbolic_distance(P, S_points[j]).reshape(len(cells), -1)
    return dist.min(axis=1)


def p_exp_stats(S, J, p: float, q: float, net: QuasiLatticeNet, counts=None) -> tuple[float, float]:
    """(|S ∩ ∪J|^p / |J|, sum_{X in J} exp(q (d-1) d_H(S, X)) / |J|).

    d_H(S, X) is the minimum distance from S to the probe points of X.
    An empty S gives an infinite vacancy term, returned as ``inf``.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if q <= 0:
        raise ValueError("q must be > 0")
    J = list(J)
    if not J:
        raise ValueError("J must be nonempty")
    pts = S.points if isinstance(S, Configuration) else np.asarray(S, dtype=float).reshape(-1, net.d)
    if counts is None:
        counts = cell_counts(pts, net)
    pd = float(np.sum(counts[J]) ** p / len(J))
    if len(pts) == 0:
        return pd, float("inf")
    dist = _probe_distance_to_S(pts, net, J)
    qv = float(np.sum(np.exp(q * (net.d - 1) * dist)) / len(J))
    return pd, qv


# ---------------------------------------------------------------------------
# graph boundaries and expansion


def boundary_out(Vsub, G, mode: str = "vertex") -> set:
    """Outer vertex boundary (members of Vsub with a neighbour outside) or crossing edges."""
    H = _graph(G)
    V = set(int(v) for v in Vsub)
    if mode == "vertex":
        return {v for v in V if any(u not in V for u in H.neighbors(v))}
    if mode == "edge":
        return {(min(v, u), max(v, u)) for v in V for u in H.neighbors(v) if u not in V}
    raise ValueError(f"unknown mode {mode!r}")


def internal_volume_ratio(Vsub, G) -> float:
    """2 x (edges with both ends in Vsub) / |Vsub|."""
    H = _graph(G)
    V = set(int(v) for v in Vsub)
    if not V:
        raise ValueError("Vsub must be nonempty")
    m = sum(1 for v in V for u in H.neighbors(v) if u in V) // 2
    return 2.0 * m / len(V)


@dataclass
class ExpansionProfile:
    """Smallest |∂_out V| / |V| found per size over the search.

    One-sided: the true infimum over anchored connected sets can only be lower.
    """

    anchor: int
    sizes: np.ndarray
    min_ratio: np.ndarray
    witnesses: dict = field(repr=False)
    trials: int = 0
    max_size: int = 0
    capped: bool = False

    @property
    def overall_min(self) -> float:
        finite = self.min_ratio[np.isfinite(self.min_ratio)]
        return float(finite.min()) if finite.size else float("nan")

    def to_dict(self) -> dict:
        return {
            "anchor": int(self.anchor),
            "sizes": [int(s) for s in self.sizes],
            "min_ratio": [float(r) for r in self.min_ratio],
            "overall_min": self.overall_min,
            "trials": int(self.trials),
            "max_size": int(self.max_size),
            "capped": bool(self.capped),
        }


def expansion_scan(G, anchor: int, max_size: int, trials: int = 20, rng=None, allowed=None,
                   noise: float = 0.3) -> ExpansionProfile:
    """Randomized greedy search for anchored sets with small outer boundary.

    Each trial grows a connected set from the anchor; at every step it adds
    the frontier vertex giving the smallest boundary (ties broken at random).
    Trial 0 is purely greedy; later trials take a random frontier vertex with
    probability ``noise``. Boundaries are counted in the full graph; growth
    is restricted to ``allowed`` vertices (e.g. the core window).
    """
    H = _graph(G)
    rng = _rng(rng)
    if anchor not in H:
        raise ValueError(f"anchor {anchor} not in graph")
    allow = (lambda v: True) if allowed is None else (lambda v: v in allowed)
    reachable = nx.node_connected_component(H, anchor)
    n_allowed = sum(1 for v in reachable if allow(v))
    cap = min(int(max_size), n_allowed)
    best = np.full(cap + 1, np.inf)
    wit: dict[int, frozenset] = {}
    for trial in range(int(trials)):
        V = {anchor}
        outdeg = {anchor: sum(1 for u in H.neighbors(anchor) if u != anchor)}
        bsize = int(outdeg[anchor] > 0)
        frontier = {u for u in H.neighbors(anchor) if allow(u)}
        if bsize / 1 < best[1]:
            best[1], wit[1] = bsize, frozenset(V)
        for size in range(2, cap + 1):
            if not frontier:
                break
            cand = sorted(frontier)
            if trial > 0 and rng.random() < noise:
                v = cand[int(rng.integers(len(cand)))]
            else:
                deltas = []
                for v in cand:
                    nbs = list(H.neighbors(v))
                    inside = [u for u in nbs if u in V]
                    lost = sum(1 for u in inside if outdeg[u] == 1)
                    gained = int(len(nbs) > len(inside))
                    deltas.append(gained - lost)
                deltas = np.array(deltas)
                choices = np.flatnonzero(deltas == deltas.min())
                v = cand[int(choices[int(rng.integers(len(choices)))])]
            nbs = list(H.neighbors(v))
            for u in nbs:
                if u in V:
                    outdeg[u] -= 1
                    if outdeg[u] == 0:
                        bsize -= 1
            V.add(v)
            outdeg[v] = sum(1 for u in nbs if u not in V)
            bsize += int(outdeg[v] > 0)
            frontier.discard(v)
            frontier.update(u for u in nbs if u not in V and allow(u))
            ratio = bsize / size
            if ratio < best[size]:
                best[size], wit[size] = ratio, frozenset(V)
    sizes = np.arange(1, cap + 1)
    return ExpansionProfile(int(anchor), sizes, best[1:], wit, int(trials), int(max_size), cap < int(max_size))


# ---------------------------------------------------------------------------
# batch audits


def audit_animals(S, net: QuasiLatticeNet, n_animals: int = 500, max_size: int = 40, M: int | None = None,
                  p: float = 1.0, q: float = 1.0, rng=None, anchor: int | None = None,
                  strategies=("bfs", "max-density", "min-vacancy"), core_margin: float = 2.0,
                  intensity: float | None = None) -> list[AnimalStats]:
    """Sample animals anchored at the origin cell and record their statistics.

    Strategies cycle through random growth and two adversarial growths that
    push the density ratio up or the vacancy ratio down. Sizes are uniform
    on 1..max_size, capped by the number of cells available: animals use
    only cells whose M-neighbourhood stays inside the core window. The
    default M is the smallest hop radius whose ball about the origin cell
    holds 8 expected points of S; the intensity is ``intensity`` (per unit
    dV) when given, else estimated from the points in the core.
    """
    rng = _rng(rng)
    counts = cell_counts(S, net)
    if anchor is None:
        anchor = int(net.cell_of(np.zeros((1, net.d)))[0])
    in_core = distance_from_origin(net.nuclei_) <= net.window_radius - core_margin
    if M is None:
        if intensity is None:
            expected = counts[in_core].sum()
        else:
            expected = intensity * ball_volume_dV(net.window_radius - core_margin, net.d)
        M = net.default_M(8, in_core.sum() / max(expected, 1e-300))
    # animals only use cells whose M-neighbourhood stays inside the core
    core = set(np.flatnonzero(net.hops_to_outside(core_margin) > M).tolist())
    if anchor not in core:
        raise ValueError("window too small: the anchor's M-neighbourhood leaves the core")
    reachable = len(nx.node_connected_component(net.face_graph_.subgraph(core), anchor))
    out = []
    for a in range(int(n_animals)):
        strat = strategies[a % len(strategies)]
        n = min(int(rng.integers(1, max_size + 1)), reachable)
        if strat == "bfs":
            J = sample_animal(net, anchor, n, rng, "bfs", allowed=core)
        elif strat == "max-density":
            J = sample_animal(net, anchor, n, rng, "greedy-adversarial",
                              objective=lambda K: density_ratio(None, K, counts=counts), allowed=core)
        elif strat == "min-vacancy":
            J = sample_animal(net, anchor, n, rng, "greedy-adversarial",
                              objective=lambda K: -vacancy_ratio(None, K, M, net, counts, core_margin=None),
                              allowed=core)
        else:
            raise ValueError(f"unknown strategy {strat!r}")
        flagged = False
        try:
            vr = vacancy_ratio(None, J, M, net, counts, core_margin=core_margin)
        except ValueError:
            vr, flagged = float("nan"), True
        pd, qv = p_exp_stats(S, J, p, q, net, counts)
        br = len(boundary_out(J, net)) / len(J)
        out.append(AnimalStats(J, anchor, density_ratio(None, J, counts=counts), vr, pd, qv, br, int(M),
                               seed=a, strategy=strat, flagged=flagged or not np.isfinite(qv)))
    return out


def lemma_connectivity(S_idx, cfg: Configuration, net: QuasiLatticeNet, G=None) -> tuple[bool, float]:
    """Check that I(S) ∪ E(S) is connected in the proximity graph of cells.

    Returns (connected, |∂_out S| / |I(S)|); the ratio needs the Delaunay
    graph ``G`` of ``cfg`` and is nan without it.
    """
    I, E = discretize(S_idx, cfg, net)
    cells = I | E
    if not cells:
        return True, float("nan")
    connected = nx.is_connected(net.proximity_subgraph(cells))
    ratio = float("nan")
    if G is not None:
        ratio = len(boundary_out(S_idx, G)) / len(I)
    return connected, ratio
