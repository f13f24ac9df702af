"""SVG pictures of Poincare-disk Voronoi (red) and Delaunay (blue) diagrams."""

from __future__ import annotations

import numpy as np

from .configuration import Configuration
from .geometry import mobius_apply, to_hyperboloid
from .tessellation import DelaunayGraph, _normalize_pair, delaunay_graph

__all__ = ["render_svg", "geodesic_path", "voronoi_edges"]

CLIP = 0.99
SIZE = 800


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def _xy(p, size=SIZE):
    h = size / 2.0
    return _fmt(h + h * p[0]), _fmt(h - h * p[1])


def geodesic_path(a, b, size: int = SIZE) -> str:
    """SVG path data for the Poincare geodesic from a to b.

    Geodesics are arcs of circles orthogonal to the unit circle, or diameters.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ax, ay = _xy(a, size)
    bx, by = _xy(b, size)
    cross = a[0] * b[1] - a[1] * b[0]
    if abs(cross) < 1e-12:
        return f"M {ax} {ay} L {bx} {by}"
    # center c solves c.a = (1 + |a|^2)/2 and c.b = (1 + |b|^2)/2
    A = np.array([a, b])
    c = np.linalg.solve(A, 0.5 * np.array([1.0 + a @ a, 1.0 + b @ b]))
    rad = np.sqrt(max(c @ c - 1.0, 0.0)) * size / 2.0
    # cross > 0: the arc turns clockwise about c in math orientation, which is
    # counterclockwise on screen (y points down), i.e. sweep-flag 0
    sweep = 0 if cross > 0 else 1
    return f"M {ax} {ay} A {_fmt(rad)} {_fmt(rad)} 0 0 {sweep} {bx} {by}"


def voronoi_edges(cfg, G: DelaunayGraph | None = None, clip: float = CLIP, n_grid: int = 4001):
    """Endpoints of the Voronoi edge dual to each Delaunay edge, clipped at |x| <= clip.

    The dual edge of (i, j) is the part of their bisector whose points have
    x_i and x_j as nearest points. After moving x_i, x_j to +-p e1 the
    bisector is the vertical diameter; the valid part is an interval of the
    Klein coordinate, located on a grid in artanh(k).
    """
    X = cfg.points if isinstance(cfg, Configuration) else np.asarray(cfg, dtype=float)
    if G is None:
        G = delaunay_graph(X)
    t = np.linspace(-12.0, 12.0, n_grid)
    out = []
    for i, j in G.edges.tolist():
        others = np.delete(X, [i, j], axis=0)
        p, Z, m, H = _normalize_pair(X[i], X[j], others, return_frame=True)
        P = to_hyperboloid(p)
        Zh = to_hyperboloid(Z) if len(Z) else None

        def image(tt):
            k = np.tanh(tt)
            y = k / (1.0 + np.sqrt(1.0 - k * k))
            return mobius_apply(m, np.c_[np.zeros_like(y), y] @ H.T)

        def valid(tt):
            ok = np.linalg.norm(image(tt), axis=1) <= clip
            if Zh is not None:
                num = Zh[:, 0][None, :] - np.outer(np.tanh(tt), Zh[:, 2])
                ok &= num.min(axis=1) / P[0] - 1.0 >= 0.0
            return ok

        idx = np.flatnonzero(valid(t))
        if idx.size < 2:
            continue
        ends = []
        for inside, outside in ((idx[0], idx[0] - 1), (idx[-1], idx[-1] + 1)):
            lo, hi = t[inside], (t[outside] if 0 <= outside < n_grid else t[inside])
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if valid(np.array([mid]))[0]:
                    lo = mid
                else:
                    hi = mid
            ends.append(image(np.array([lo]))[0])
        out.append((i, j, ends[0], ends[1]))
    return out


def render_svg(cfg, G: DelaunayGraph | None = None, net=None, size: int = SIZE, clip: float = CLIP,
               point_radius: float = 2.0) -> str:
    """Deterministic SVG 1.1 document: unit circle, red Voronoi, blue Delaunay, nuclei.

    Raises:
        ValueError: d != 2.
    """
    X = cfg.points if isinstance(cfg, Configuration) else np.asarray(cfg, dtype=float).reshape(-1, 2)
    d = cfg.d if isinstance(cfg, Configuration) else X.shape[1]
    if d != 2:
        raise ValueError("SVG rendering supports d = 2 only")
    h = size / 2.0
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<circle cx="{_fmt(h)}" cy="{_fmt(h)}" r="{_fmt(h)}" fill="none" stroke="black" stroke-width="1"/>',
        f'<circle cx="{_fmt(h)}" cy="{_fmt(h)}" r="{_fmt(h * clip)}" fill="none" stroke="#999999" '
        f'stroke-width="0.5" stroke-dasharray="4 4"/>',
    ]
    if net is not None:
        parts.append('<g fill="#cccccc" stroke="none">')
        for q in net.nuclei_:
            if np.linalg.norm(q) <= clip:
                cx, cy = _xy(q, size)
                parts.append(f'<circle cx="{cx}" cy="{cy}" r="1"/>')
        parts.append("</g>")
    if len(X) >= 2:
        if G is None:
            G = delaunay_graph(X)
        parts.append('<g fill="none" stroke="red" stroke-width="1">')
        for _, _, a, b in voronoi_edges(X, G, clip):
            parts.append(f'<path d="{geodesic_path(a, b, size)}"/>')
        parts.append("</g>")
        parts.append('<g fill="none" stroke="blue" stroke-width="1">')
        for i, j in G.edges.tolist():
            parts.append(f'<path d="{geodesic_path(X[i], X[j], size)}"/>')
        parts.append("</g>")
    parts.append('<g fill="black" stroke="none">')
    for q in X:
        cx, cy = _xy(q, size)
        parts.append(f'<circle cx="{cx}" cy="{cy}" r="{_fmt(point_radius)}"/>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

