"""Hyperbolic geometry in the Poincare ball model.

Points are arrays whose last axis holds the ball coordinates. Functions
broadcast over leading axes where that is cheap to support.

The volume measure used throughout is

    dV(x) = dx / (c_d (1 - |x|^2)^d),

which is the Riemannian volume of curvature -1 rescaled by 1 / (2^d c_d).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi

import numpy as np
from scipy import integrate

from ._validation import check_ball_points, check_dimension, check_point

__all__ = [
    "bracket_sq",
    "mobius_apply",
    "mobius_modulus",
    "hyperbolic_distance",
    "pairwise_distances",
    "cosh_distance",
    "klein_convert",
    "IsometrySpec",
    "apply_isometry",
    "invert_isometry",
    "random_isometry",
    "VolumeSpec",
    "unit_ball_volume",
    "ball_volume_dV",
    "euclidean_ball_volume_dV",
    "distance_from_origin",
    "radius_to_norm",
    "hyperbolic_midpoint",
    "to_hyperboloid",
    "from_hyperboloid",
    "angle_at_origin",
    "hyperbolic_ball_to_euclidean",
    "euclidean_ball_to_hyperbolic",
]


def _sq(v):
    return np.einsum("...i,...i->...", v, v)


def bracket_sq(x, a):
    """Return [x, a]^2 = 1 - 2<x, a> + |a|^2 |x|^2.

    Strictly positive for x, a in the open ball.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if x.shape[-1] != a.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {a.shape[-1]}")
    return 1.0 - 2.0 * np.einsum("...i,...i->...", x, a) + _sq(a) * _sq(x)


def mobius_apply(a, x):
    """Apply the involution phi_a to x.

    phi_a(x) = (a |x - a|^2 + (1 - |a|^2)(a - x)) / [x, a]^2. It swaps
    a and 0 and satisfies phi_a(phi_a(x)) = x.
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    diff = x - a
    num = a * _sq(diff)[..., None] + (1.0 - _sq(a))[..., None] * (a - x)
    return num / bracket_sq(x, a)[..., None]


def mobius_modulus(a, x):
    """|phi_a(x)|, computed as |x - a| / [x, a] to avoid cancellation."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    return np.sqrt(_sq(x - a) / bracket_sq(x, a))


def hyperbolic_distance(x, y):
    """Hyperbolic distance log((1 + t)/(1 - t)) with t = |phi_x(y)|.

    This is the curvature -1 distance; it satisfies
    cosh d = (1 + t^2)/(1 - t^2) = 1 + 2|x - y|^2 / ((1 - |x|^2)(1 - |y|^2)).
    """
    t = np.minimum(mobius_modulus(x, y), 1.0)
    return 2.0 * np.arctanh(t)


def pairwise_distances(X, Y=None):
    """Matrix of hyperbolic distances between rows of X and rows of Y."""
    X = np.asarray(X, dtype=float)
    Y = X if Y is None else np.asarray(Y, dtype=float)
    nx = _sq(X)
    ny = _sq(Y)
    diff2 = np.maximum(nx[:, None] + ny[None, :] - 2.0 * X @ Y.T, 0.0)
    br = 1.0 - 2.0 * X @ Y.T + nx[:, None] * ny[None, :]
    t = np.sqrt(np.minimum(diff2 / br, 1.0))
    return 2.0 * np.arctanh(np.minimum(t, 1.0 - 1e-16))


def cosh_distance(x, y):
    """cosh of the hyperbolic distance, 1 + 2|x-y|^2/((1-|x|^2)(1-|y|^2))."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 1.0 + 2.0 * _sq(x - y) / ((1.0 - _sq(x)) * (1.0 - _sq(y)))


def klein_convert(x, direction: str = "to-klein"):
    """Convert between Poincare and Klein coordinates.

    Args:
        x: Point(s), norm < 1.
        direction: ``"to-klein"`` (k = 2p / (1 + |p|^2)) or ``"from-klein"``.

    Returns:
        Converted point(s), same shape as ``x``.
    """
    x = np.asarray(x, dtype=float)
    n2 = _sq(x)[..., None]
    key = direction.lower().replace("_", "-")
    if key == "to-klein":
        return 2.0 * x / (1.0 + n2)
    if key == "from-klein":
        return x / (1.0 + np.sqrt(np.maximum(1.0 - n2, 0.0)))
    raise ValueError(f"unknown direction {direction!r}")


@dataclass(frozen=True)
class IsometrySpec:
    """The isometry x -> rotation @ phi_translation(x)."""

    translation: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        a = check_point(self.translation, name="translation")
        Q = np.asarray(self.rotation, dtype=float)
        if Q.shape != (a.size, a.size):
            raise ValueError("rotation must be a d x d matrix")
        if not np.allclose(Q.T @ Q, np.eye(a.size), atol=1e-12, rtol=0):
            raise ValueError("rotation is not orthogonal to 1e-12")
        object.__setattr__(self, "translation", a)
        object.__setattr__(self, "rotation", Q)

    @classmethod
    def identity(cls, d: int) -> "IsometrySpec":
        # phi_0 is x -> -x, so pair it with -I to get the identity map.
        return cls(np.zeros(d), -np.eye(d))

    @property
    def d(self) -> int:
        return self.translation.size


def apply_isometry(g: IsometrySpec, x):
    """Apply g to point(s) x."""
    return mobius_apply(g.translation, x) @ g.rotation.T


def invert_isometry(g: IsometrySpec, y):
    """Apply the inverse of g to point(s) y."""
    return mobius_apply(g.translation, np.asarray(y, dtype=float) @ g.rotation)


def random_isometry(d: int, rng=None, max_norm: float = 0.9) -> IsometrySpec:
    """Draw a random isometry: Haar rotation, translation uniform in a Euclidean ball."""
    rng = np.random.default_rng(rng)
    v = rng.standard_normal(d)
    a = v / np.linalg.norm(v) * max_norm * rng.random() ** (1.0 / d)
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    return IsometrySpec(a, Q)


def unit_ball_volume(d: int) -> float:
    """Euclidean volume c_d of the unit d-ball."""
    return pi ** (d / 2.0) / gamma(d / 2.0 + 1.0)


@dataclass(frozen=True)
class VolumeSpec:
    """Dimension and the normalizing constant c_d of dV."""

    d: int
    c_d: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "d", check_dimension(self.d))
        object.__setattr__(self, "c_d", unit_ball_volume(self.d))


def _as_volume_spec(vol) -> VolumeSpec:
    return vol if isinstance(vol, VolumeSpec) else VolumeSpec(int(vol))


def ball_volume_dV(r, vol=2) -> float:
    """dV-measure of a hyperbolic ball of radius r.

    In polar coordinates dV = (d / 2^d) sinh(t)^(d-1) dt dtheta with theta the
    normalized sphere measure. For d = 2 the result is sinh(r/2)^2; other
    dimensions use adaptive quadrature at relative tolerance 1e-10.

    Args:
        r: Hyperbolic radius, r >= 0.
        vol: A VolumeSpec or the dimension d.
    """
    r = float(r)
    if r < 0 or not np.isfinite(r):
        raise ValueError(f"radius must be a finite non-negative number, got {r}")
    d = _as_volume_spec(vol).d
    if d == 2:
        return float(np.sinh(r / 2.0) ** 2)
    val, _ = integrate.quad(lambda t: np.sinh(t) ** (d - 1), 0.0, r, epsrel=1e-10, epsabs=0.0, limit=200)
    return d / 2.0**d * val


def euclidean_ball_volume_dV(rho: float, d: int = 2) -> float:
    """dV-measure of the Euclidean ball of radius rho about the origin."""
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    if d == 2:
        return rho**2 / (1.0 - rho**2)
    return ball_volume_dV(2.0 * np.arctanh(rho), d)


def distance_from_origin(x):
    """Hyperbolic distance 2 artanh|x| from 0."""
    return 2.0 * np.arctanh(np.linalg.norm(np.asarray(x, dtype=float), axis=-1))


def radius_to_norm(r):
    """Euclidean norm of a point at hyperbolic distance r from 0."""
    return np.tanh(np.asarray(r, dtype=float) / 2.0)


def hyperbolic_midpoint(x, y):
    """Midpoint of the geodesic segment [x, y]."""
    x = check_point(x)
    y = check_point(y, d=x.size)
    z = mobius_apply(x, y)  # x sits at 0 in this frame
    nz = np.linalg.norm(z)
    if nz == 0:
        return x.copy()
    half = np.tanh(np.arctanh(nz) / 2.0)
    return mobius_apply(x, z / nz * half)


def to_hyperboloid(p):
    """Map ball points to the hyperboloid model (X0, X) with X0^2 - |X|^2 = 1."""
    p = np.asarray(p, dtype=float)
    n2 = _sq(p)[..., None]
    return np.concatenate([(1.0 + n2) / (1.0 - n2), 2.0 * p / (1.0 - n2)], axis=-1)


def from_hyperboloid(X):
    X = np.asarray(X, dtype=float)
    return X[..., 1:] / (1.0 + X[..., :1])


def angle_at_origin(x, y) -> float:
    """Angle at 0 between the geodesics towards x and y.

    Geodesics through the origin are straight in both the Klein and Poincare
    models, so this is the Euclidean angle of the Klein images. The angle is
    undefined when x or y is the origin; 0 is returned then.
    """
    kx = klein_convert(x)
    ky = klein_convert(y)
    den = np.linalg.norm(kx) * np.linalg.norm(ky)
    if den == 0:
        return 0.0
    c = np.dot(kx, ky) / den
    return float(np.arccos(np.clip(c, -1.0, 1.0)))




def hyperbolic_ball_to_euclidean(center, radius):
    """Euclidean (center, radius) of the hyperbolic ball B(center, radius).

    Vectorized over leading axes of ``center`` and over ``radius``.
    """
    q = np.asarray(center, dtype=float)
    rho = np.asarray(radius, dtype=float)
    a = np.linalg.norm(q, axis=-1)
    d0 = 2.0 * np.arctanh(a)
    outer = np.tanh((d0 + rho) / 2.0)
    inner = np.tanh((d0 - rho) / 2.0)  # signed: negative past the origin
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(a[..., None] > 0, q / np.where(a > 0, a, 1.0)[..., None], 0.0)
    c = unit * ((outer + inner) / 2.0)[..., None]
    return c, (outer - inner) / 2.0


def euclidean_ball_to_hyperbolic(c, r):
    """Hyperbolic (center, radius) of a Euclidean ball inside the open unit ball."""
    c = np.asarray(c, dtype=float)
    r = np.asarray(r, dtype=float)
    a = np.linalg.norm(c, axis=-1)
    if np.any(a + r >= 1.0):
        raise ValueError("Euclidean ball is not contained in the open unit ball")
    d_out = 2.0 * np.arctanh(a + r)
    d_in = 2.0 * np.arctanh(a - r)  # signed
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(a[..., None] > 0, c / np.where(a > 0, a, 1.0)[..., None], 0.0)
    mid = (d_out + d_in) / 2.0
    return unit * np.tanh(mid / 2.0)[..., None], (d_out - d_in) / 2.0
