"""Berezin kernels on the Poincare ball: evaluation, expansions, norm bounds.

The kernel is K_s(x, y) = (1 - |phi_x(y)|^2)^(sigma (1 + s)) with
sigma = (d - 1)/2, acting on L^2(dV).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma

import numpy as np
from scipy import integrate, linalg, optimize
from scipy.special import roots_jacobi

from ._validation import check_ball_points, check_dimension, check_point
from .geometry import bracket_sq
from .special import phi_m_s, sphere_cos_density, zonal_from_cos

__all__ = [
    "KernelSpec",
    "SeriesTruncation",
    "kernel_eval",
    "kernel_matrix",
    "gram_psd_check",
    "beta_integral",
    "norm_upper_bound",
    "norm_lower_bound",
    "norm_bounds",
    "best_norm_bounds",
    "conjectured_norm",
    "reproducing_constant",
    "harmonic_reproducing_check",
    "kernel_series_eval",
    "series_truncation_error",
    "R_theta",
    "hilbert_matrix_norm",
    "hs_norm_ball",
    "hs_trace_ball",
    "windowed_radial_norm",
    "estimate_norm_discrete",
]


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of a Berezin kernel.

    Attributes
    ----------
    d : int
        Dimension.
    s : float
        Decay parameter; the operator is bounded iff s > 0.
    normalization : float or None
        Divisor applied to the kernel when building a DPP. ``None`` resolves
        to :meth:`default_normalization`.
    """

    d: int
    s: float
    normalization: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "d", check_dimension(self.d))
        if not np.isfinite(self.s) or self.s < 0:
            raise ValueError(f"s must be finite and >= 0, got {self.s}")
        if self.normalization is not None and not self.normalization > 0:
            raise ValueError("normalization must be positive")

    @property
    def sigma(self) -> float:
        return (self.d - 1) / 2.0

    @property
    def exponent(self) -> float:
        """sigma (1 + s), the power applied to 1 - |phi_x(y)|^2."""
        return self.sigma * (1.0 + self.s)

    def default_normalization(self) -> float | None:
        """pi at s = 1/(d-1), the conjectured value for d = 2, s >= 1, else None."""
        if self.normalization is not None:
            return float(self.normalization)
        if abs(self.s * (self.d - 1) - 1.0) < 1e-12:
            return float(np.pi)
        if self.d == 2 and self.s >= 1:
            return conjectured_norm(self.s)
        return None


@dataclass(frozen=True)
class SeriesTruncation:
    M: int
    achieved_error: float


def kernel_eval(x, y, spec: KernelSpec):
    """K_s(x, y); broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    nx = np.einsum("...i,...i->...", x, x)
    ny = np.einsum("...i,...i->...", y, y)
    q = (1.0 - nx) * (1.0 - ny) / bracket_sq(x, y)
    return np.minimum(q, 1.0) ** spec.exponent


def kernel_matrix(X, Y, spec: KernelSpec) -> np.ndarray:
    """Matrix K_s(X[i], Y[j])."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    nx = np.einsum("ij,ij->i", X, X)
    ny = np.einsum("ij,ij->i", Y, Y)
    br = 1.0 - 2.0 * X @ Y.T + nx[:, None] * ny[None, :]
    q = np.outer(1.0 - nx, 1.0 - ny) / br
    return np.minimum(q, 1.0) ** spec.exponent


def gram_psd_check(points, spec: KernelSpec) -> float:
    """Smallest eigenvalue of the Gram matrix K_s(x_i, x_j)."""
    X = check_ball_points(points, allow_empty=False)
    G = kernel_matrix(X, X, spec)
    return float(linalg.eigvalsh(G, subset_by_index=[0, 0])[0])


def _beta_integral_closed(s, d, beta):
    sigma = (d - 1) / 2.0
    a = sigma * (s - 1) / 2.0 + beta / 2.0
    return np.exp(lgamma(sigma + 0.5) + lgamma(a) - lgamma(sigma * (1 + s) / 2.0 + beta / 2.0 + 0.5)) / 2.0


def beta_integral(s: float, d: int, beta: float, method: str = "closed") -> float:
    """Integral of sinh(r)^(d-1) cosh(r)^(-sigma(1+s)-beta) over r > 0.

    Closed form Gamma(sigma+1/2) Gamma(sigma(s-1)/2 + beta/2) /
    (2 Gamma(sigma(1+s)/2 + beta/2 + 1/2)); ``method="quadrature"`` integrates
    numerically instead.
    """
    sigma = (d - 1) / 2.0
    if not sigma * (1 + s) + beta > d - 1:
        raise ValueError("beta_integral diverges: need sigma(1+s) + beta > d - 1")
    if method == "closed":
        return float(_beta_integral_closed(s, d, beta))
    if method == "quadrature":
        p = sigma * (1 + s) + beta

        def f(r):
            # sinh^(d-1) cosh^(-p) written to avoid overflow at large r
            if r <= 0:
                return 0.0
            logcosh = r + np.log1p(np.exp(-2.0 * r)) - np.log(2.0)
            return np.exp((d - 1) * np.log(np.tanh(r)) + (d - 1 - p) * logcosh)

        val, _ = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=500)
        return float(val)
    raise ValueError(f"unknown method {method!r}")


def norm_upper_bound(s: float, d: int, beta: float) -> float:
    """Schur-test upper bound on ||K_s|| with test function cosh-weight beta.

    Admissible for max(0, sigma(1-s)) <= beta < sigma with
    beta > sigma(1 - s). The sphere factor is
    2^beta Gamma(sigma+1/2) Gamma(sigma-beta) / (Gamma(sigma) Gamma(sigma-beta+1/2))
    and the radial factor d * beta_integral(s, d, sigma(s-1) + 2 beta).
    """
    sigma = (d - 1) / 2.0
    if not (beta >= 0 and beta > sigma * (1 - s) and beta < sigma):
        raise ValueError(f"beta={beta} outside the admissible range for the upper bound")
    sphere = np.exp(
        beta * np.log(2.0) + lgamma(sigma + 0.5) + lgamma(sigma - beta) - lgamma(sigma) - lgamma(sigma - beta + 0.5)
    )
    radial = d * _beta_integral_closed(s, d, sigma * (s - 1) + 2.0 * beta)
    return float(sphere * radial)


def norm_lower_bound(s: float, d: int, beta: float) -> float:
    """Test-function lower bound on ||K_s||, admissible for beta > sigma."""
    sigma = (d - 1) / 2.0
    if not (beta > sigma and sigma * (s - 1) + beta > 0):
        raise ValueError(f"beta={beta} outside the admissible range for the lower bound")
    num = _beta_integral_closed(s, d, beta) ** 2
    den = np.exp(lgamma(sigma + 0.5) + lgamma(beta - sigma) - lgamma(beta + 0.5)) / 2.0
    return float(0.5 * num / den)


def norm_bounds(s: float, d: int, beta: float) -> tuple[float, float]:
    """Return (upper, lower) at a single beta; NaN where beta is inadmissible."""
    try:
        up = norm_upper_bound(s, d, beta)
    except ValueError:
        up = float("nan")
    try:
        lo = norm_lower_bound(s, d, beta)
    except ValueError:
        lo = float("nan")
    return up, lo


def best_norm_bounds(s: float, d: int, n_grid: int = 400) -> dict:
    """Optimize both bounds over beta (grid search, then bounded refinement)."""
    sigma = (d - 1) / 2.0
    out = {}
    lo_b = max(0.0, sigma * (1 - s))
    if lo_b < sigma:
        eps = 1e-9
        grid = np.linspace(lo_b + (eps if s <= 1 else 0.0), sigma - 1e-6, n_grid)
        vals = np.array([norm_upper_bound(s, d, b) for b in grid])
        i = int(np.argmin(vals))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
        res = optimize.minimize_scalar(lambda t: norm_upper_bound(s, d, t), bounds=(a, b), method="bounded")
        if res.fun < vals[i]:
            out["upper"], out["beta_upper"] = float(res.fun), float(res.x)
        else:
            out["upper"], out["beta_upper"] = float(vals[i]), float(grid[i])
    else:
        out["upper"], out["beta_upper"] = float("inf"), float("nan")
    start = max(sigma, sigma * (1 - s)) + 1e-6
    grid = start + np.geomspace(1e-6, 50.0 * (1 + sigma * (1 + s)), n_grid)
    vals = np.array([norm_lower_bound(s, d, b) for b in grid])
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    res = optimize.minimize_scalar(lambda t: -norm_lower_bound(s, d, t), bounds=(a, b), method="bounded")
    if -res.fun > vals[i]:
        out["lower"], out["beta_lower"] = float(-res.fun), float(res.x)
    else:
        out["lower"], out["beta_lower"] = float(vals[i]), float(grid[i])
    return out


def conjectured_norm(s: float) -> float:
    """Gamma(s/2)^2 / Gamma((s+1)/2)^2, the conjectured d = 2 norm."""
    if s <= 0:
        raise ValueError("s must be positive")
    return float(np.exp(2.0 * (lgamma(s / 2.0) - lgamma((s + 1) / 2.0))))


def reproducing_constant(s: float, d: int, form: str = "exact") -> float:
    """Constant c_s with int K_s(x, y) dV(y) = c_s.

    ``form="exact"`` returns (d/2) Gamma(d/2) Gamma(sigma(s-1)) / Gamma(sigma(s-1) + d/2),
    the value of the integral (finite iff s > 1). ``form="printed"`` returns
    (d/2) Gamma(d/2) Gamma(sigma(1+s)-1) / Gamma(d/2 + sigma(1+s) - 1); both agree for d = 2.
    """
    sigma = (d - 1) / 2.0
    if form == "exact":
        a = sigma * (s - 1)
    elif form == "printed":
        a = sigma * (1 + s) - 1
    else:
        raise ValueError(f"unknown form {form!r}")
    if a <= 0:
        raise ValueError("integral diverges for these parameters")
    return float(d / 2.0 * np.exp(lgamma(d / 2.0) + lgamma(a) - lgamma(a + d / 2.0)))


def harmonic_reproducing_check(s: float, d: int, x, n_quadrature: int = 200) -> float:
    """Quadrature value of int K_s(x, y) dV(y).

    Integrates in polar coordinates about the origin (not about x), so the
    x-independence of the result is a genuine check of invariance. The
    angular variable uses an ``n_quadrature``-node Gauss-Jacobi rule; the
    radial variable (half-distance rho, |y| = tanh rho) is adaptive.
    """
    x = check_point(x, d=d)
    sigma = (d - 1) / 2.0
    if s <= 1:
        raise ValueError("int K_s dV diverges unless s > 1")
    alpha = sigma * (1.0 + s)
    C, e = sphere_cos_density(d)
    if e == 0.0:
        tn, tw = np.polynomial.legendre.leggauss(n_quadrature)
    else:
        tn, tw = roots_jacobi(n_quadrature, e, e)
    tw = C * tw
    a = float(np.linalg.norm(x))
    onemx = 1.0 - a * a

    def radial(rho):
        b = np.tanh(rho)
        br = 1.0 - 2.0 * a * b * tn + (a * b) ** 2
        # (1-|x|^2)^alpha (1-|y|^2)^alpha / [x,y]^(2 alpha) times the polar dV factor
        ang = np.sum(tw * (onemx / br) ** alpha)
        logfac = np.log(d) + 2 * sigma * np.log(np.tanh(rho)) + (4 * sigma - 2 * alpha) * np.log(np.cosh(rho))
        return ang * np.exp(logfac) if rho > 0 else 0.0

    rho_x = np.arctanh(a)
    pts = [rho_x] if rho_x > 0 else None
    upper = rho_x + 60.0 / max(2 * alpha - 4 * sigma, 1e-3)
    val, _ = integrate.quad(radial, 0.0, upper, points=pts, epsabs=0.0, epsrel=1e-11, limit=500)
    return float(val)


def kernel_series_eval(x, y, spec: KernelSpec, M: int) -> float:
    """Truncated zonal expansion of K_s(x, y) through degree M."""
    x = check_point(x, d=spec.d)
    y = check_point(y, d=spec.d)
    if M < 0:
        raise ValueError("M must be >= 0")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    pre = ((1 - nx**2) * (1 - ny**2) / (1 - (nx * ny) ** 2)) ** spec.exponent
    r = nx * ny
    if r == 0:
        return float(pre * phi_m_s(0, 0.0, spec.s, spec.d))
    t = float(np.dot(x, y) / r)
    total = 0.0
    for m in range(M + 1):
        total += float(phi_m_s(m, r, spec.s, spec.d)) * float(zonal_from_cos(m, t, spec.d))
    return float(pre * total)


def series_truncation_error(spec: KernelSpec, M: int, pairs) -> SeriesTruncation:
    """Max |series - closed form| over the given (x, y) pairs."""
    err = 0.0
    for x, y in pairs:
        err = max(err, abs(kernel_series_eval(x, y, spec, M) - float(kernel_eval(x, y, spec))))
    return SeriesTruncation(M=int(M), achieved_error=float(err))


def R_theta(r, t, theta: float):
    """Radial kernel (r t)^(theta-1) / (1 - r t)."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any((r < 0) | (r >= 1) | (t < 0) | (t >= 1)):
        raise ValueError("r and t must lie in [0, 1)")
    if theta < 1:
        raise ValueError("theta must be >= 1")
    rt = r * t
    return np.where(rt == 0, 1.0 if theta == 1 else 0.0, rt ** (theta - 1.0)) / (1.0 - rt)


def hilbert_matrix_norm(theta: float, n: int) -> float:
    """Top eigenvalue of the n x n section of (1/(k + l + theta))."""
    if theta <= 0.5:
        raise ValueError("theta must exceed 1/2")
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n, dtype=float)
    H = 1.0 / (k[:, None] + k[None, :] + theta)
    return float(linalg.eigvalsh(H, subset_by_index=[n - 1, n - 1])[0])


def hs_trace_ball(rho: float, d: int = 2) -> float:
    """Trace of K_{1/(d-1)} on the Euclidean rho-ball, i.e. its dV-volume."""
    from .geometry import euclidean_ball_volume_dV

    return euclidean_ball_volume_dV(rho, d)


def hs_norm_ball(rho: float, d: int = 2, method: str = "auto") -> float:
    """Squared Hilbert-Schmidt norm of K_{1/(d-1)} restricted to the Euclidean rho-ball.

    For d = 2 the closed form is rho^4 / (1 - rho^4). ``method="quadrature"``
    (the only option for d > 2) integrates
    d^2 int int a^(d-1) b^(d-1) E[(1 - 2ab c + a^2 b^2)^(-d)] da db
    with the angular mean taken by a Gauss-Jacobi rule.
    """
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    d = check_dimension(d)
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method != "quadrature" and d == 2:
        return rho**4 / (1.0 - rho**4)
    if method == "closed":
        raise ValueError("closed form only for d = 2")
    if rho == 0:
        return 0.0
    C, e = sphere_cos_density(d)
    if e == 0.0:
        tn, tw = np.polynomial.legendre.leggauss(64)
    else:
        tn, tw = roots_jacobi(64, e, e)
    tw = C * tw

    def f(b, a):
        u = a * b
        return d * d * (a * b) ** (d - 1) * np.sum(tw * (1.0 - 2.0 * u * tn + u * u) ** (-d))

    val, _ = integrate.dblquad(f, 0.0, rho, 0.0, rho, epsabs=1e-13, epsrel=1e-11)
    return float(val)


def windowed_radial_norm(R: float, n: int = 2000) -> float:
    """Norm of K_1 (d = 2) restricted to the hyperbolic ball of radius R.

    The m = 0 Fourier mode dominates; it reduces to the kernel
    (1 - r^2)(1 - t^2)/(1 - r^2 t^2) on [0, tanh(R/2)] with measure
    2 r dr / (1 - r^2)^2, discretized by Gauss-Legendre in u = artanh(r).
    """
    rho = np.tanh(R / 2.0)
    xg, wg = np.polynomial.legendre.leggauss(n)
    umax = np.arctanh(rho)
    u = 0.5 * umax * (xg + 1.0)
    w = 0.5 * umax * wg
    r = np.tanh(u)
    # dV mass in u: 2 r dr/(1-r^2)^2 with dr = (1 - r^2) du
    mass = w * 2.0 * r / (1.0 - r**2)
    K = np.outer(1 - r**2, 1 - r**2) / (1.0 - np.outer(r, r) ** 2)
    sq = np.sqrt(mass)
    A = sq[:, None] * K * sq[None, :]
    return float(linalg.eigvalsh(A, subset_by_index=[n - 1, n - 1])[0])


def estimate_norm_discrete(spec: KernelSpec, window_radius: float, n_seeds: int = 4000, rng=None) -> float:
    """Top eigenvalue of the unnormalized discrete kernel on uniform-dV seeds.

    The matrix is K_s(x_i, x_j) w with w = Vol(window) / n_seeds, i.e. the
    kernel acting on functions constant on the seeds' cells.
    """
    from .geometry import ball_volume_dV
    from .samplers import sample_uniform

    if n_seeds < 100:
        raise ValueError("n_seeds must be >= 100")
    seeds = sample_uniform(int(n_seeds), window_radius, spec.d, rng)
    w = ball_volume_dV(window_radius, spec.d) / n_seeds
    M = kernel_matrix(seeds.points, seeds.points, spec) * w
    from scipy.sparse.linalg import eigsh

    # fixed start vector keeps the Lanczos iteration deterministic
    val = eigsh(M, k=1, which="LA", v0=np.ones(M.shape[0]), tol=1e-12, return_eigenvectors=False)
    return float(val[0])
