"""Hyperbolic Delaunay/Voronoi structures, quasi-lattice nets and discretization.

The Delaunay graph of a finite set S of the Poincare ball joins x and y when
some open hyperbolic ball misses S and has x and y on its boundary. Every
hyperbolic ball is a Euclidean ball inside the unit ball, so hyperbolic
Delaunay edges form a subset of the Euclidean ones; an Euclidean edge
survives when its Euclidean Voronoi face contains a center c whose sphere
through x_i stays inside the unit ball, i.e. |c| + |c - x_i| < 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy import optimize
from scipy.spatial import ConvexHull, Delaunay, QhullError, cKDTree
from scipy.stats import qmc
from sklearn.base import BaseEstimator

from ._validation import check_ball_points, check_dimension, check_positive
from .configuration import Configuration
from .geometry import (
    ball_volume_dV,
    distance_from_origin,
    euclidean_ball_to_hyperbolic,
    hyperbolic_ball_to_euclidean,
    hyperbolic_distance,
    hyperbolic_midpoint,
    klein_convert,
    mobius_apply,
    pairwise_distances,
    radius_to_norm,
    to_hyperboloid,
)

__all__ = [
    "Configuration",
    "nearest_index",
    "DelaunayGraph",
    "HyperbolicDelaunay",
    "delaunay_graph",
    "delaunay_edge_oracle",
    "voronoi_boundary",
    "horoball_oracle",
    "QuasiLatticeNet",
    "build_net",
    "cell_of",
    "discretize",
    "hull_volume",
    "klein_hull_vertices",
    "CosphericalError",
]

COSPHERICAL_TOL = 1e-9
TIE_RTOL = 1e-12


class CosphericalError(ValueError):
    """d + 2 points lie on a common sphere (within tolerance)."""


# ---------------------------------------------------------------------------
# nearest nucleus


def _flatten_lists(lists):
    """(row, item) index arrays from a list of index lists."""
    lens = np.fromiter((len(l) for l in lists), dtype=int, count=len(lists))
    rows = np.repeat(np.arange(len(lists)), lens)
    items = np.fromiter((v for l in lists for v in l), dtype=int, count=int(lens.sum()))
    return rows, items


def nearest_index(P, Q, tree: cKDTree | None = None, k: int = 8) -> np.ndarray:
    """Index of the hyperbolically nearest row of P for each row of Q.

    Ties (relative 1e-12) go to the lowest index. Exact: Euclidean
    candidates are certified against the Euclidean image of the hyperbolic
    ball through the best candidate, falling back to a ball query.
    """
    P = np.asarray(P, dtype=float)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = P.shape[0]
    if n == 0:
        raise ValueError("no reference points")
    if Q.shape[0] == 0:
        return np.zeros(0, dtype=int)
    tree = tree or cKDTree(P)
    k = min(k, n)
    de, cand = tree.query(Q, k=k)
    if k == 1:
        de, cand = de[:, None], cand[:, None]
    dh = hyperbolic_distance(Q[:, None, :], P[cand])
    dmin = dh.min(axis=1)
    tied = dh <= dmin[:, None] * (1 + TIE_RTOL) + 1e-15
    best = np.where(tied, cand, n).min(axis=1)
    if k == n:
        return best
    rad = dmin * (1 + 1e-9) + 1e-12
    ce, re = hyperbolic_ball_to_euclidean(Q, rad)
    reach = np.linalg.norm(ce - Q, axis=1) + re
    bad = np.flatnonzero(de[:, -1] <= reach)
    if bad.size:
        lists = tree.query_ball_point(ce[bad], re[bad] * (1 + 1e-9) + 1e-15)
        q, idx = _flatten_lists(lists)
        if q.size:
            qq = bad[q]
            dist = hyperbolic_distance(Q[qq], P[idx])
            m = np.full(len(bad), np.inf)
            np.minimum.at(m, q, dist)
            tie = dist <= m[q] * (1 + TIE_RTOL) + 1e-15
            b2 = np.full(len(bad), n)
            np.minimum.at(b2, q[tie], idx[tie])
            found = b2 < n
            best[bad[found]] = b2[found]
    return best


# ---------------------------------------------------------------------------
# Delaunay graph


@dataclass
class DelaunayGraph:
    """Hyperbolic Delaunay graph of a configuration.

    Attributes
    ----------
    n : int
        Number of vertices.
    edges : ndarray, shape (m, 2)
        Sorted pairs i < j, lexicographic order.
    simplices : ndarray, shape (k, d + 1)
        Euclidean Delaunay simplices whose circumball lies inside the unit ball.
    voronoi_boundary : ndarray
        Sorted indices of vertices with unbounded Voronoi cells.
    """

    n: int
    edges: np.ndarray
    simplices: np.ndarray
    voronoi_boundary: np.ndarray
    points: np.ndarray | None = field(default=None, repr=False)
    _graph: nx.Graph | None = field(default=None, repr=False)

    @property
    def vertices(self) -> np.ndarray:
        return np.arange(self.n)

    @property
    def graph(self) -> nx.Graph:
        if self._graph is None:
            G = nx.Graph()
            G.add_nodes_from(range(self.n))
            G.add_edges_from(map(tuple, self.edges.tolist()))
            self._graph = G
        return self._graph

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges.tolist()))

    def neighbors(self, i: int) -> list[int]:
        return sorted(self.graph.neighbors(i))

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)


def _circumspheres(X, simplices):
    """Circumcenters and radii of simplices (rows of vertex indices)."""
    V = X[simplices]  # (k, d+1, d)
    A = 2.0 * (V[:, 1:, :] - V[:, :1, :])
    b = np.einsum("kij,kij->ki", V[:, 1:, :], V[:, 1:, :]) - np.einsum("kj,kj->k", V[:, 0, :], V[:, 0, :])[:, None]
    c = np.linalg.solve(A, b[..., None])[..., 0]
    R = np.linalg.norm(c - V[:, 0, :], axis=1)
    return c, R


def _facet_normal(F):
    """Unit normal of the hyperplane through the rows of F (d points in R^d)."""
    D = F[1:] - F[0]
    _, _, vt = np.linalg.svd(D)
    return vt[-1]


def _segment_face_min(xi, xj, c0, u, tmax):
    """min of |c| + |c - x_i| over c = c0 + t u, 0 <= t <= tmax.

    On the bisector |c - x_i| = |c - x_j|, so the unconstrained minimizer is
    where the segment from 0 to the farther of x_i, x_j crosses the bisector.
    """
    far = xi if np.dot(xi, xi) >= np.dot(xj, xj) else xj
    nvec = xj - xi
    mid = 0.5 * (xi + xj)
    den = np.dot(far, nvec)
    if abs(den) < 1e-300:
        tstar = 0.0
    else:
        p = far * (np.dot(mid, nvec) / den)
        tstar = float(np.dot(p - c0, u))
    t = min(max(tstar, 0.0), tmax)
    c = c0 + t * u
    return float(np.linalg.norm(c) + np.linalg.norm(c - xi))


def _ellipsoid_map(xi):
    """Affine map y = S (c - xi/2) sending {|c| + |c - xi| < 1} to the unit ball."""
    d = xi.size
    nrm = np.linalg.norm(xi)
    a = 0.5
    b = 0.5 * np.sqrt(max(1.0 - nrm * nrm, 0.0))
    if nrm == 0:
        return np.eye(d) / a
    u = xi / nrm
    P = np.outer(u, u)
    return P / a + (np.eye(d) - P) / b


def _face_qp_min(xi, centers, rays):
    """min over the face conv(centers) + cone(rays) of the ellipsoid norm^2."""
    S = _ellipsoid_map(xi)
    C = (centers - 0.5 * xi) @ S.T
    Rm = rays @ S.T if len(rays) else np.zeros((0, xi.size))
    k, m = len(C), len(Rm)
    B = np.vstack([C, Rm])

    def fun(z):
        y = z @ B
        return float(y @ y), 2.0 * (B @ y)

    best = np.argmin(np.einsum("ij,ij->i", C, C))
    z0 = np.zeros(k + m)
    z0[best] = 1.0
    cons = [{"type": "eq", "fun": lambda z: np.sum(z[:k]) - 1.0, "jac": lambda z: np.r_[np.ones(k), np.zeros(m)]}]
    bounds = [(0.0, None)] * (k + m)
    res = optimize.minimize(fun, z0, jac=True, method="SLSQP", bounds=bounds, constraints=cons,
                            options={"ftol": 1e-15, "maxiter": 500})
    z = np.clip(res.x, 0.0, None)
    z[:k] /= max(z[:k].sum(), 1e-300)
    y = z @ B
    return float(min(y @ y, fun(z0)[0]))


def _rank(X) -> int:
    if len(X) <= 1:
        return 0
    return int(np.linalg.matrix_rank(X - X.mean(axis=0), tol=1e-10))


def delaunay_graph(cfg, check_cospherical: bool = True) -> DelaunayGraph:
    """Hyperbolic Delaunay graph of a configuration.

    Euclidean Delaunay simplices whose circumball lies in the open unit ball
    are kept; the remaining Euclidean edges are certified by a convex search
    over their Euclidean Voronoi face (closed form in d = 2, a small QP
    otherwise). Rank-deficient input falls back to the empty-ball oracle.

    Raises:
        ValueError: fewer than 2 points.
        CosphericalError: d + 2 points cospherical within 1e-9.
    """
    X = cfg.points if isinstance(cfg, Configuration) else check_ball_points(cfg)
    n, d = X.shape
    if n < 2:
        raise ValueError("a Delaunay graph needs at least 2 points")
    if n <= d or _rank(X) < d:
        if n > 400:
            raise ValueError("degenerate (rank-deficient) configuration too large for the oracle fallback")
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if delaunay_edge_oracle(i, j, X)]
        E = np.array(edges, dtype=int).reshape(-1, 2)
        return DelaunayGraph(n, E, np.zeros((0, d + 1), dtype=int), np.arange(n), X)
    try:
        tri = Delaunay(X)
    except QhullError as exc:  # pragma: no cover - Qhull failures on valid input are rare
        raise CosphericalError(f"Qhull failed: {exc}") from exc
    if len(tri.coplanar):
        raise CosphericalError("some points were dropped by Qhull (coincident or degenerate)")
    simp = np.sort(tri.simplices, axis=1)
    centers, radii = _circumspheres(X, tri.simplices)
    if check_cospherical:
        nb = tri.neighbors
        s_idx, k_idx = np.nonzero(nb >= 0)
        opp = tri.simplices[nb[s_idx, k_idx]]
        # vertex of the neighbouring simplex not shared with s
        shared = (opp[:, :, None] == tri.simplices[s_idx][:, None, :]).any(axis=2)
        other = opp[~shared]
        gap = np.abs(np.linalg.norm(X[other] - centers[s_idx], axis=1) - radii[s_idx])
        if np.any(gap < COSPHERICAL_TOL * np.maximum(radii[s_idx], 1.0)):
            raise CosphericalError("d + 2 cospherical points within tolerance")
    keep = np.linalg.norm(centers, axis=1) + radii < 1.0
    pairs = [(a, b) for a in range(d + 1) for b in range(a + 1, d + 1)]
    kept_edges = set()
    for a, b in pairs:
        kept_edges.update(zip(simp[keep, a].tolist(), simp[keep, b].tolist()))
    # edge -> incident simplices, for edges not already certified
    edge_simplices: dict[tuple[int, int], list[int]] = {}
    for s in np.flatnonzero(~keep):
        row = simp[s]
        for a, b in pairs:
            e = (int(row[a]), int(row[b]))
            if e not in kept_edges:
                edge_simplices.setdefault(e, []).append(int(s))
    edge_rays: dict[tuple[int, int], list[np.ndarray]] = {}
    if edge_simplices:
        hs, hk = np.nonzero(tri.neighbors == -1)
        for s, k in zip(hs.tolist(), hk.tolist()):
            verts = np.delete(tri.simplices[s], k)
            nrm = _facet_normal(X[verts])
            if np.dot(nrm, X[verts[0]] - X[tri.simplices[s][k]]) < 0:
                nrm = -nrm
            vs = np.sort(verts)
            for a in range(len(vs)):
                for b in range(a + 1, len(vs)):
                    e = (int(vs[a]), int(vs[b]))
                    if e in edge_simplices:
                        edge_rays.setdefault(e, []).append(nrm)
    extra = []
    for e, slist in edge_simplices.items():
        xi, xj = X[e[0]], X[e[1]]
        C = centers[slist]
        rays = edge_rays.get(e, [])
        if d == 2:
            if len(C) == 2:
                seg = C[1] - C[0]
                L = float(np.linalg.norm(seg))
                val = _segment_face_min(xi, xj, C[0], seg / L, L) if L > 0 else \
                    float(np.linalg.norm(C[0]) + np.linalg.norm(C[0] - xi))
            elif len(C) == 1 and rays:
                val = min(_segment_face_min(xi, xj, C[0], r, np.inf) for r in rays)
            else:
                val = float(np.linalg.norm(C[0]) + np.linalg.norm(C[0] - xi))
            ok = val < 1.0
        else:
            ok = _face_qp_min(xi, C, np.asarray(rays).reshape(-1, d)) < 1.0
        if ok:
            extra.append(e)
    all_edges = sorted(kept_edges.union(extra))
    E = np.array(all_edges, dtype=int).reshape(-1, 2)
    hull = np.unique(tri.convex_hull)
    unb = np.unique(tri.simplices[~keep]) if np.any(~keep) else np.zeros(0, dtype=int)
    T = np.union1d(hull, unb).astype(int)
    return DelaunayGraph(n, E, simp[keep], T, X)


def voronoi_boundary(cfg) -> np.ndarray:
    """Indices of points whose hyperbolic Voronoi cell is unbounded.

    Vertices of the Euclidean convex hull together with vertices of
    Euclidean Delaunay simplices whose circumball leaves the open unit ball.
    Rank-deficient configurations have every cell unbounded.
    """
    X = cfg.points if isinstance(cfg, Configuration) else check_ball_points(cfg)
    n, d = X.shape
    if n == 0:
        return np.zeros(0, dtype=int)
    if n <= d or _rank(X) < d:
        return np.arange(n)
    return delaunay_graph(X).voronoi_boundary


class HyperbolicDelaunay(BaseEstimator):
    """Estimator wrapper around :func:`delaunay_graph`.

    Attributes
    ----------
    graph_ : DelaunayGraph
    edges_ : ndarray of shape (m, 2)
    voronoi_boundary_ : ndarray
    """

    def __init__(self, check_cospherical=True):
        self.check_cospherical = check_cospherical

    def fit(self, X, y=None):
        self.graph_ = delaunay_graph(X, check_cospherical=self.check_cospherical)
        self.edges_ = self.graph_.edges
        self.voronoi_boundary_ = self.graph_.voronoi_boundary
        self.n_vertices_ = self.graph_.n
        return self


# ---------------------------------------------------------------------------
# oracles


def _normalize_pair(xi, xj, others, return_frame=False):
    """Move x_i, x_j to p e1 and -p e1 by an isometry; returns (p, others').

    The isometry is y = H phi_m(x) with m the midpoint and H a reflection;
    ``return_frame`` also returns (m, H), and x = phi_m(H y) inverts it.
    """
    m = hyperbolic_midpoint(xi, xj)
    pi_ = mobius_apply(m, xi)
    Z = mobius_apply(m, others) if len(others) else others
    d = xi.size
    u = pi_ / np.linalg.norm(pi_)
    e1 = np.zeros(d)
    e1[0] = 1.0
    v = u - e1
    if np.linalg.norm(v) > 1e-15:
        H = np.eye(d) - 2.0 * np.outer(v, v) / np.dot(v, v)
    else:
        H = np.eye(d)
    out = H @ pi_, (Z @ H.T if len(others) else Z)
    return out + (m, H) if return_frame else out


def _oracle_margin(P, Zs, k):
    """min_z (Z0 - k.Z) / (P0 - k.P) - 1 for Klein points k of the bisector."""
    k = np.atleast_2d(k)
    den = P[0] - k @ P[2:]
    num = Zs[:, 0][None, :] - k @ Zs[:, 2:].T
    return num.min(axis=1) / den - 1.0


def delaunay_edge_oracle(i: int, j: int, cfg, n_grid: int = 4001, n_starts: int = 2, tol: float = 1e-12) -> bool:
    """Empty-ball test for the pair (i, j) by direct search over ball centers.

    After an isometry placing x_i, x_j at +-p e1, the centers of balls with
    both points on the boundary form the hyperplane {x_1 = 0}. A center c
    (written in Klein coordinates k of that hyperplane) works iff
    h(c) = min_z cosh d(c, z) / cosh d(c, x_i) - 1 > 0 for every other point
    z, which is the sign of min_z d(c, z) - d(c, x_i). On the hyperboloid
    cosh d(c, z) is affine in k, so h is a minimum of affine functions and a
    local maximum is global. h is scanned on a grid (fine 1-D grid in d = 2,
    polar grid otherwise) and refined locally from the best grid points.
    """
    X = cfg.points if isinstance(cfg, Configuration) else np.asarray(cfg, dtype=float)
    if i == j:
        raise ValueError("i and j must differ")
    n, d = X.shape
    mask = np.ones(n, dtype=bool)
    mask[[i, j]] = False
    others = X[mask]
    if len(others) == 0:
        return True
    p, Z = _normalize_pair(X[i], X[j], others)
    P = to_hyperboloid(p)
    Zs = to_hyperboloid(Z)
    # cheap certificate: a single z with h_z <= 0 on the whole closed ball
    if np.min((Zs[:, 0] + np.linalg.norm(Zs[:, 2:], axis=1)) / P[0]) - 1.0 <= tol:
        return False
    T = 18.0
    if d == 2:
        t = np.linspace(-T, T, n_grid)
        h = _oracle_margin(P, Zs, np.tanh(t)[:, None])
        if h.max() > tol:
            return True
        for o in np.argsort(h)[::-1][:n_starts]:
            lo, hi = t[max(o - 1, 0)], t[min(o + 1, n_grid - 1)]
            res = optimize.minimize_scalar(lambda s: -_oracle_margin(P, Zs, np.array([[np.tanh(s)]]))[0],
                                           bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
            if -res.fun > tol:
                return True
        return False
    m = d - 1
    if m == 2:
        ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        dirs = np.c_[np.cos(ang), np.sin(ang)]
    else:
        dirs = np.random.default_rng(0).standard_normal((256, m))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.tanh(np.linspace(0, T, 80))
    grid = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, m)
    h = _oracle_margin(P, Zs, grid)
    if h.max() > tol:
        return True
    # epigraph form: maximize tau subject to tau <= a_z - b_z.k and |k| <= 1
    a = Zs[:, 0] / P[0] - 1.0
    B = Zs[:, 2:] / P[0]
    cons = [
        {"type": "ineq", "fun": lambda v: a - B @ v[:m] - v[m], "jac": lambda v: np.c_[-B, -np.ones(len(a))]},
        {"type": "ineq", "fun": lambda v: 1.0 - v[:m] @ v[:m], "jac": lambda v: np.r_[-2.0 * v[:m], 0.0]},
    ]
    for o in np.argsort(h)[::-1][:n_starts]:
        v0 = np.r_[grid[o], h[o]]
        res = optimize.minimize(lambda v: -v[m], v0, jac=lambda v: np.r_[np.zeros(m), -1.0], method="SLSQP",
                                constraints=cons, options={"ftol": 1e-15, "maxiter": 500})
        k = res.x[:m]
        nk = np.linalg.norm(k)
        if nk >= 1.0:
            k = k / nk * (1.0 - 1e-15)
        if _oracle_margin(P, Zs, k)[0] > tol:
            return True
    return False


def horoball_oracle(p: int, cfg, n_directions: int = 4096) -> bool:
    """One-sided test for an empty horoball through point p.

    For each sampled ideal direction w, the horoball through x_p tangent at
    w is the Euclidean ball with center t w and radius 1 - t,
    t = (1 - |x_p|^2) / (2 (1 - x_p.w)). Returns True if one of them has no
    other configuration point in its interior.
    """
    X = cfg.points if isinstance(cfg, Configuration) else np.asarray(cfg, dtype=float)
    n, d = X.shape
    if n <= 1:
        return True
    x = X[p]
    others = np.delete(X, p, axis=0)
    if d == 2:
        a = np.linspace(0.0, 2 * np.pi, n_directions, endpoint=False)
        W = np.c_[np.cos(a), np.sin(a)]
    elif d == 3:
        k = np.arange(n_directions) + 0.5
        phi = np.arccos(1 - 2 * k / n_directions)
        th = np.pi * (1 + 5**0.5) * k
        W = np.c_[np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)]
    else:
        W = np.random.default_rng(0).standard_normal((n_directions, d))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
    xn2 = float(x @ x)
    for start in range(0, len(W), 1024):
        Wb = W[start:start + 1024]
        t = (1.0 - xn2) / (2.0 * (1.0 - Wb @ x))
        # |z - t w|^2 < (1 - t)^2  <=>  |z|^2 - 2 t z.w < 1 - 2 t
        zz = np.einsum("ij,ij->i", others, others)
        lhs = zz[None, :] - 2.0 * t[:, None] * (Wb @ others.T)
        inside = lhs < (1.0 - 2.0 * t)[:, None]
        if np.any(~inside.any(axis=1)):
            return True
    return False


def klein_hull_vertices(points) -> np.ndarray:
    """Indices of extreme points of the Klein-model hull (all points if degenerate)."""
    X = np.asarray(points, dtype=float)
    n, d = X.shape
    if n <= d or _rank(X) < d:
        return np.arange(n)
    K = klein_convert(X)
    return np.sort(ConvexHull(K).vertices)


# ---------------------------------------------------------------------------
# quasi-lattice net


def _fill_holes_2d(nuclei, R, r, tol=1e-12):
    """New nucleus candidates from Voronoi vertices and window-boundary maxima."""
    X = np.asarray(nuclei)
    new = []
    if len(X) >= 3 and _rank(X) == 2:
        tri = Delaunay(X)
        c, Re = _circumspheres(X, tri.simplices)
        ok = np.linalg.norm(c, axis=1) + Re < 1.0
        if np.any(ok):
            hc, hr = euclidean_ball_to_hyperbolic(c[ok], Re[ok])
            good = (hr >= r) & (distance_from_origin(hc) <= R)
            new.extend(hc[good])
    # boundary circle of the window: coarse probes then local maximization
    rad = float(radius_to_norm(R))
    L = 2 * np.pi * np.sinh(R)
    h = 0.02
    m = max(int(np.ceil(L / h)), 64)
    ang = np.linspace(0, 2 * np.pi, m, endpoint=False)
    B = rad * np.c_[np.cos(ang), np.sin(ang)]
    tree = cKDTree(X)
    idx = nearest_index(X, B, tree)
    dist = hyperbolic_distance(B, X[idx])
    step = 2 * np.pi / m
    centers = ang[dist > r - h]
    # two rounds of vectorized local subsampling around each flagged angle
    sub = np.linspace(-1.0, 1.0, 65)
    for width in (step, 2 * step / 64):
        if centers.size == 0:
            break
        A = (centers[:, None] + width * sub[None, :]).ravel()
        Bq = rad * np.c_[np.cos(A), np.sin(A)]
        dq = hyperbolic_distance(Bq, X[nearest_index(X, Bq, tree)]).reshape(len(centers), -1)
        best = np.argmax(dq, axis=1)
        centers = A.reshape(len(centers), -1)[np.arange(len(centers)), best]
        dbest = dq[np.arange(len(centers)), best]
    if centers.size:
        keep = dbest >= r - tol
        new.extend(rad * (1 - 1e-12) * np.c_[np.cos(centers[keep]), np.sin(centers[keep])])
    return np.array(new).reshape(-1, 2)


class QuasiLatticeNet(BaseEstimator):
    """Greedy maximal r-separated net of a hyperbolic window.

    Stands in for the orbit of a cocompact lattice: the Voronoi cells of the
    nuclei give a tessellation with bounded geometry.

    Parameters
    ----------
    window_radius : float
    separation : float
        Minimum hyperbolic distance r between nuclei.
    d : int
    probes_per_cell : int
        Quasi-random probe points kept per cell (for cell distances and E(S)).
    oversample : int
        Candidates per expected nucleus in the greedy pass.
    random_state : int, Generator or None

    Attributes
    ----------
    nuclei_ : ndarray (n_cells, d)
    covering_radius_ : float
        Largest distance from a window point to its nucleus (exact in d = 2
        up to optimizer tolerance; probe estimate otherwise).
    cell_diameter_ : float
        2 * covering_radius_, an upper bound on cell diameters within the window.
    face_graph_ : networkx.Graph
        Cells adjacent across a codimension-1 face (hyperbolic Delaunay of nuclei).
    probes_ : ndarray (n_cells, probes_per_cell, d)
    """

    def __init__(self, window_radius=6.0, separation=0.7, d=2, probes_per_cell=32, oversample=12,
                 random_state=None):
        self.window_radius = window_radius
        self.separation = separation
        self.d = d
        self.probes_per_cell = probes_per_cell
        self.oversample = oversample
        self.random_state = random_state

    # -- construction -------------------------------------------------------
    def fit(self, X=None, y=None):
        R = check_positive(self.window_radius, "window_radius")
        r = check_positive(self.separation, "separation")
        d = check_dimension(self.d)
        rng = np.random.default_rng(self.random_state)
        from .samplers import sample_uniform

        V = ball_volume_dV(R, d)
        expected = V / ball_volume_dV(r / 2.0, d)
        n_cand = int(min(max(self.oversample * expected, 64), 2_000_000))
        cand = sample_uniform(n_cand, R, d, rng).points
        nuclei = self._greedy(np.zeros((1, d)), cand, r)
        for _ in range(50):
            if d == 2:
                extra = _fill_holes_2d(nuclei, R, r)
            else:
                probes = sample_uniform(max(20 * len(nuclei), 1000), R, d, rng).points
                j = nearest_index(nuclei, probes)
                dist = hyperbolic_distance(probes, nuclei[j])
                extra = probes[dist >= r]
            if len(extra) == 0:
                break
            nuclei = self._greedy(nuclei, extra, r)
        self.nuclei_ = nuclei
        self.tree_ = cKDTree(nuclei)
        self.n_cells_ = len(nuclei)
        self.covering_radius_ = self._covering_radius(rng)
        self.cell_diameter_ = 2.0 * self.covering_radius_
        self._build_face_graph()
        self._build_probes()
        self._proximity = None
        return self

    @staticmethod
    def _greedy(accepted, cand, r):
        acc = [a for a in np.asarray(accepted)]
        batch = 20000
        for start in range(0, len(cand), batch):
            C = cand[start:start + batch]
            A = np.asarray(acc)
            ce, re = hyperbolic_ball_to_euclidean(C, np.full(len(C), r))
            tree = cKDTree(A)
            q, idx = _flatten_lists(tree.query_ball_point(ce, re * (1 + 1e-9)))
            ok = np.ones(len(C), dtype=bool)
            if q.size:
                ok[q[hyperbolic_distance(C[q], A[idx]) < r]] = False
            C = C[ok]
            if len(C) == 0:
                continue
            ce, re = hyperbolic_ball_to_euclidean(C, np.full(len(C), r))
            tc = cKDTree(C)
            near = tc.query_ball_point(ce, re * (1 + 1e-9))
            taken = np.zeros(len(C), dtype=bool)
            for q in range(len(C)):
                lst = [m for m in near[q] if m < q and taken[m]]
                if lst and np.any(hyperbolic_distance(C[q], C[lst]) < r):
                    continue
                taken[q] = True
            acc.extend(C[taken])
        return np.asarray(acc)

    def _covering_radius(self, rng):
        X = self.nuclei_
        R = self.window_radius
        best = 0.0
        if self.d == 2 and len(X) >= 3 and _rank(X) == 2:
            tri = Delaunay(X)
            c, Re = _circumspheres(X, tri.simplices)
            ok = np.linalg.norm(c, axis=1) + Re < 1.0
            hc, hr = euclidean_ball_to_hyperbolic(c[ok], Re[ok])
            inside = distance_from_origin(hc) <= R
            if np.any(inside):
                best = float(hr[inside].max())
        from .samplers import sample_uniform

        probes = sample_uniform(20000, R, self.d, rng).points
        rad = float(radius_to_norm(R))
        if self.d == 2:
            ang = np.linspace(0, 2 * np.pi, max(int(2 * np.pi * np.sinh(R) / 0.01), 256), endpoint=False)
            probes = np.vstack([probes, rad * (1 - 1e-12) * np.c_[np.cos(ang), np.sin(ang)]])
        j = nearest_index(X, probes, self.tree_)
        best = max(best, float(hyperbolic_distance(probes, X[j]).max()))
        return best

    def _build_face_graph(self):
        X = self.nuclei_
        G = nx.Graph()
        G.add_nodes_from(range(len(X)))
        if len(X) >= 2:
            G.add_edges_from(map(tuple, delaunay_graph(X, check_cospherical=False).edges.tolist()))
        self.face_graph_ = G

    def _build_probes(self):
        """Quasi-random probes in each cell (clipped to the window)."""
        X = self.nuclei_
        n, d = X.shape
        k = int(self.probes_per_cell)
        m = 8 * k
        base = qmc.Halton(d, scramble=False).random(m + 1)[1:]
        # dV-uniform points in the ball of radius covering_radius_ about 0
        rho = self.covering_radius_ * 1.0000001
        u = base[:, 0]
        if d == 2:
            rr = np.arccosh(1.0 + u * (np.cosh(rho) - 1.0))
            ang = 2 * np.pi * base[:, 1]
            dirs = np.c_[np.cos(ang), np.sin(ang)]
        else:
            from .samplers import sample_radii

            rr = np.quantile(sample_radii(20000, rho, d, 0), u)
            g = qmc.Halton(d, scramble=False).random(m + 1)[1:]
            from scipy.stats import norm as _norm

            z = _norm.ppf(np.clip(g, 1e-12, 1 - 1e-12))
            dirs = z / np.linalg.norm(z, axis=1, keepdims=True)
        B = dirs * radius_to_norm(rr)[:, None]
        probes = np.empty((n, k, d))
        count = np.zeros(n, dtype=int)
        R = self.window_radius
        for start in range(0, n, 2000):
            idx = np.arange(start, min(start + 2000, n))
            P = mobius_apply(X[idx][:, None, :], -B[None, :, :])  # phi_x(-b): a point at distance |b| from x
            flat = P.reshape(-1, d)
            owner = nearest_index(X, flat, self.tree_).reshape(len(idx), m)
            inwin = distance_from_origin(P) <= R
            good = (owner == idx[:, None]) & inwin
            for row, i in enumerate(idx):
                pts = P[row][good[row]][: k - 1]
                probes[i, 0] = X[i]
                probes[i, 1:1 + len(pts)] = pts
                if len(pts) < k - 1:  # pad with the nucleus
                    probes[i, 1 + len(pts):] = X[i]
                count[i] = 1 + len(pts)
        self.probes_ = probes
        self.probe_counts_ = count

    # -- queries ------------------------------------------------------------
    def cell_of(self, X) -> np.ndarray:
        """Index of the nearest nucleus (lowest index on ties)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return nearest_index(self.nuclei_, X, self.tree_)

    def cell_distance(self, a: int, b: int) -> float:
        """Probe estimate (an upper bound) of the distance between cells a and b."""
        if a == b:
            return 0.0
        return float(pairwise_distances(self.probes_[a], self.probes_[b]).min())

    def proximity_graph(self) -> nx.Graph:
        """The graph joining cells at (probe-estimated) distance <= 2D."""
        if self._proximity is not None:
            return self._proximity
        X = self.nuclei_
        D = self.cell_diameter_
        Rc = self.covering_radius_
        G = nx.Graph()
        G.add_nodes_from(range(len(X)))
        ce, re = hyperbolic_ball_to_euclidean(X, np.full(len(X), 2 * D + 2 * Rc))
        near = self.tree_.query_ball_point(ce, re * (1 + 1e-9))
        for a, lst in enumerate(near):
            lst = np.array([b for b in lst if b > a], dtype=int)
            if lst.size == 0:
                continue
            dn = hyperbolic_distance(X[a], X[lst])
            sure = lst[dn <= 2 * D]
            G.add_edges_from((a, int(b)) for b in sure)
            maybe = lst[(dn > 2 * D) & (dn <= 2 * D + 2 * Rc)]
            for b in maybe:
                if self.cell_distance(a, int(b)) <= 2 * D:
                    G.add_edge(a, int(b))
        self._proximity = G
        return G

    def proximity_subgraph(self, cells) -> nx.Graph:
        """Proximity graph restricted to the given cells (cell distance <= 2D)."""
        if self._proximity is not None:
            return self._proximity.subgraph(cells).copy()
        cells = np.array(sorted(int(c) for c in cells), dtype=int)
        G = nx.Graph()
        G.add_nodes_from(cells.tolist())
        D = self.cell_diameter_
        Rc = self.covering_radius_
        dn = pairwise_distances(self.nuclei_[cells])
        ia, ib = np.nonzero(np.triu(dn <= 2 * D + 2 * Rc, k=1))
        for a, b in zip(ia.tolist(), ib.tolist()):
            if dn[a, b] <= 2 * D or self.cell_distance(cells[a], cells[b]) <= 2 * D:
                G.add_edge(int(cells[a]), int(cells[b]))
        return G

    def hop_ball(self, cells, M: int) -> set[int]:
        """Cells within M face-adjacency hops of the given cells."""
        frontier = set(int(c) for c in cells)
        seen = set(frontier)
        for _ in range(int(M)):
            nxt = set()
            for c in frontier:
                nxt.update(self.face_graph_.neighbors(c))
            nxt -= seen
            seen |= nxt
            frontier = nxt
        return seen

    def default_M(self, factor: float = 8, cells_per_point: float = 1.0) -> int:
        """Smallest M whose hop ball around the origin cell has >= factor expected points.

        With ``cells_per_point`` = 1 this is a plain cell count.
        """
        anchor = int(self.cell_of(np.zeros((1, self.d)))[0])
        target = factor * max(float(cells_per_point), 1.0)
        for M in range(0, 64):
            if len(self.hop_ball([anchor], M)) >= target:
                return M
        return 64

    def hops_to_outside(self, margin: float = 2.0) -> np.ndarray:
        """Hop distance from each cell to the nearest cell outside the core."""
        r = distance_from_origin(self.nuclei_)
        outside = np.flatnonzero(r > self.window_radius - margin).tolist()
        dist = np.full(self.n_cells_, np.iinfo(np.int64).max // 2, dtype=np.int64)
        if not outside:
            return dist
        for v, h in nx.multi_source_dijkstra_path_length(self.face_graph_, outside, weight=None).items():
            dist[v] = h
        return dist

    def core_cells(self, margin: float = 2.0) -> np.ndarray:
        return np.flatnonzero(distance_from_origin(self.nuclei_) <= self.window_radius - margin)


def build_net(window_radius: float, separation: float = 0.7, rng=None, d: int = 2, **kwargs) -> QuasiLatticeNet:
    """Fit and return a :class:`QuasiLatticeNet`."""
    if window_radius <= 0:
        raise ValueError("window radius must be positive")
    return QuasiLatticeNet(window_radius, separation, d, random_state=rng, **kwargs).fit()


def cell_of(x, net: QuasiLatticeNet):
    """Cell index (or indices) of point(s) x."""
    x = np.asarray(x, dtype=float)
    out = net.cell_of(x.reshape(-1, net.d))
    return int(out[0]) if x.ndim == 1 else out


# ---------------------------------------------------------------------------
# discretization and hulls


def discretize(S, cfg: Configuration, net: QuasiLatticeNet) -> tuple[set[int], set[int]]:
    """Cells occupied by S and empty cells meeting a Voronoi cell of S.

    Parameters
    ----------
    S : array_like of int
        Indices into ``cfg`` (the subset S of the full configuration).
    cfg : Configuration
        The full configuration whose Voronoi cells are used.
    net : QuasiLatticeNet

    Returns
    -------
    I, E : set of int
        I(S) = cells containing a point of S. E(S) = cells with no point of
        S having a probe whose nearest configuration point lies in S.
    """
    S = np.asarray(list(S), dtype=int)
    if S.size == 0:
        return set(), set()
    I = set(net.cell_of(cfg.points[S]).tolist())
    inS = np.zeros(len(cfg), dtype=bool)
    inS[S] = True
    # candidate cells: those whose probes could reach S's Voronoi cells
    tree = cKDTree(cfg.points)
    P = net.probes_.reshape(-1, net.d)
    owner = nearest_index(cfg.points, P, tree).reshape(net.n_cells_, -1)
    hit = inS[owner].any(axis=1)
    E = set(np.flatnonzero(hit).tolist()) - I
    return I, E


def hull_volume(cfg, n_mc: int = 100_000, rng=None) -> tuple[float, float]:
    """Monte Carlo dV-volume of the hyperbolic convex hull and its standard error.

    The hyperbolic hull is the Euclidean hull of the Klein images; uniform
    dV-samples of the window are tested for membership.
    """
    from .samplers import sample_uniform

    X = cfg.points if isinstance(cfg, Configuration) else np.asarray(cfg, dtype=float)
    d = X.shape[1]
    R = cfg.window_radius if isinstance(cfg, Configuration) else float(distance_from_origin(X).max()) + 1e-9
    if len(X) < d + 1 or _rank(X) < d:
        return 0.0, 0.0
    K = klein_convert(X)
    try:
        tri = Delaunay(K)
    except QhullError:
        return 0.0, 0.0
    pts = sample_uniform(int(n_mc), R, d, rng).points
    inside = tri.find_simplex(klein_convert(pts)) >= 0
    V = ball_volume_dV(R, d)
    f = inside.mean()
    return float(V * f), float(V * np.sqrt(f * (1 - f) / n_mc))
