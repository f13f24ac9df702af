"""Simple random walk on Delaunay graphs and speed estimation."""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy import stats

from .geometry import distance_from_origin, hyperbolic_distance
from .tessellation import DelaunayGraph

__all__ = ["WalkTrace", "SpeedEstimate", "walk", "speed_estimates", "bootstrap_speed"]


@dataclass
class WalkTrace:
    """A walk X_0, ..., X_n with its displacement series.

    ``truncated`` is True when the walk stopped early on leaving the core
    window; ``steps`` then counts the steps actually taken.
    """

    vertices: np.ndarray
    positions: np.ndarray
    hyperbolic_displacement: np.ndarray
    graph_distance: np.ndarray
    truncated: bool = False
    requested_steps: int = 0

    @property
    def steps(self) -> int:
        return len(self.vertices) - 1

    def rows(self):
        for k in range(len(self.vertices)):
            yield {
                "step": k,
                "vertex": int(self.vertices[k]),
                "hyperbolic_displacement": float(self.hyperbolic_displacement[k]),
                "graph_distance": int(self.graph_distance[k]),
            }


def _adjacency(G):
    H = G.graph if isinstance(G, DelaunayGraph) else G
    return H, {v: np.array(sorted(H.neighbors(v)), dtype=int) for v in H.nodes}


def walk(G, start: int, steps: int, rng=None, positions=None, core_radius: float | None = None,
         _adj=None) -> WalkTrace:
    """Run a simple random walk of ``steps`` uniform-neighbour moves.

    Parameters
    ----------
    G : DelaunayGraph or networkx.Graph
    start : int
    positions : ndarray, optional
        Ball coordinates of the vertices (taken from G.points if available).
    core_radius : float, optional
        Stop (and flag the trace) as soon as the walk reaches a vertex at
        hyperbolic distance > core_radius from the origin.

    Raises:
        ValueError: negative steps, unknown or isolated start vertex.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if steps < 0:
        raise ValueError("steps must be >= 0")
    H, adj = _adj if _adj is not None else _adjacency(G)
    if start not in H:
        raise ValueError(f"start vertex {start} not in graph")
    if steps > 0 and len(adj[start]) == 0:
        raise ValueError("start vertex is isolated")
    if positions is None and isinstance(G, DelaunayGraph):
        positions = G.points
    path = [int(start)]
    truncated = False
    radii = distance_from_origin(positions) if (positions is not None and core_radius is not None) else None
    v = int(start)
    for _ in range(int(steps)):
        nb = adj[v]
        v = int(nb[rng.integers(len(nb))])
        path.append(v)
        if radii is not None and radii[v] > core_radius:
            truncated = True
            break
    path = np.array(path, dtype=int)
    gd_map = nx.single_source_shortest_path_length(H, int(start))
    gdist = np.array([gd_map[u] for u in path], dtype=int)
    if positions is not None:
        pos = np.asarray(positions)[path]
        hdisp = hyperbolic_distance(pos[0], pos)
        hdisp[0] = 0.0
    else:
        pos = np.zeros((len(path), 0))
        hdisp = np.full(len(path), np.nan)
    return WalkTrace(path, pos, hdisp, gdist, truncated, int(steps))


@dataclass
class SpeedEstimate:
    hyperbolic: float
    graph: float
    hyperbolic_se: float
    graph_se: float
    steps: int


def speed_estimates(trace: WalkTrace, n_blocks: int = 10, n_boot: int = 1000, rng=0) -> SpeedEstimate:
    """d_H(X_0, X_n)/n and d_G(X_0, X_n)/n with bootstrap standard errors.

    The errors resample the per-block speeds d(X_{kb}, X_{(k+1)b})/b of
    ``n_blocks`` consecutive sub-traces. Graph distances of sub-traces are
    bounded by the block length, so the graph speed error uses the
    hop-count increments of the global graph distance instead.
    """
    n = trace.steps
    if n < 1:
        raise ValueError("speed estimates need at least one step")
    vh = float(trace.hyperbolic_displacement[-1] / n)
    vg = float(trace.graph_distance[-1] / n)
    nb = max(1, min(int(n_blocks), n))
    b = n // nb
    if nb < 2 or b < 1:
        return SpeedEstimate(vh, vg, float("nan"), float("nan"), n)
    idx = np.arange(0, nb * b + 1, b)
    if trace.positions.shape[1] > 0:
        P = trace.positions[idx]
        bh = hyperbolic_distance(P[:-1], P[1:]) / b
    else:
        bh = np.full(nb, np.nan)
    bg = np.diff(trace.graph_distance[idx]) / b
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    pick = rng.integers(nb, size=(n_boot, nb))
    return SpeedEstimate(vh, vg, float(bh[pick].mean(axis=1).std(ddof=1)), float(bg[pick].mean(axis=1).std(ddof=1)),
                         n)


def bootstrap_speed(traces, confidence: float = 0.99, n_boot: int = 9999, rng=0) -> dict:
    """Percentile bootstrap interval for the mean hyperbolic speed over walks.

    Each walk contributes d_H(X_0, X_T)/T at its stopping time T.
    """
    v = np.array([t.hyperbolic_displacement[-1] / t.steps for t in traces if t.steps > 0])
    if len(v) < 2:
        raise ValueError("need at least two walks with steps")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    res = stats.bootstrap((v,), np.mean, confidence_level=confidence, n_resamples=n_boot, method="percentile",
                          random_state=rng)
    return {
        "mean": float(v.mean()),
        "low": float(res.confidence_interval.low),
        "high": float(res.confidence_interval.high),
        "confidence": float(confidence),
        "n_walks": int(len(v)),
        "truncated": int(sum(t.truncated for t in traces)),
        "mean_steps": float(np.mean([t.steps for t in traces])),
    }
