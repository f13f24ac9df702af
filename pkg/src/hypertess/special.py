"""Special functions: a controlled 2F1 series, zonal harmonics, Phi_s, Q-tilde and G_s."""

from __future__ import annotations

import warnings
from math import comb, lgamma

import numpy as np
from scipy import integrate, special

__all__ = [
    "SeriesConvergenceWarning",
    "hyp2f1_series",
    "h_dim",
    "zonal",
    "zonal_from_cos",
    "phi_m_s",
    "spherical_Phi",
    "spherical_Phi_quadrature",
    "Q_tilde",
    "G_s",
    "sphere_cos_density",
]

HYP_TOL = 1e-14
HYP_MAX_TERMS = 100_000


class SeriesConvergenceWarning(RuntimeWarning):
    """Raised (as a warning) when a power series hits its term budget."""


def hyp2f1_series(a, b, c, z, tol=HYP_TOL, max_terms=HYP_MAX_TERMS, return_info=False):
    """Gauss hypergeometric 2F1(a, b; c; z) by direct power series.

    Summation stops for each entry once the current term, inflated by the
    geometric tail bound 1/(1 - q) with q the latest term ratio, is below
    ``tol`` relative to the partial sum, or after ``max_terms`` terms.
    Terminating series (a or b a non-positive integer) stop exactly.

    Parameters
    ----------
    a, b, c : float
        Parameters; c must not be a non-positive integer.
    z : array_like
        Arguments with |z| < 1.
    return_info : bool
        Also return the number of terms used and a convergence mask.

    Returns
    -------
    ndarray or (ndarray, int, ndarray)
    """
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= 1):
        raise ValueError("power series requires |z| < 1")
    if c <= 0 and float(c).is_integer():
        raise ValueError("c must not be a non-positive integer")
    zf = np.atleast_1d(z).ravel()
    total = np.ones_like(zf)
    term = np.ones_like(zf)
    done = np.zeros(zf.shape, dtype=bool)
    k = 0
    while k < max_terms and not np.all(done):
        coef = (a + k) * (b + k) / ((c + k) * (k + 1.0))
        if coef == 0.0:
            done[:] = True
            break
        new = term * coef * zf
        total = np.where(done, total, total + new)
        q = np.abs(coef * zf)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(q < 1, np.abs(new) / (1.0 - np.minimum(q, 1 - 1e-16)), np.inf)
            ok = tail <= tol * np.abs(total)
        done |= ok | (new == 0.0)
        term = new
        k += 1
    converged = done.copy()
    if not np.all(converged):
        warnings.warn(
            f"2F1 series did not reach tolerance {tol:g} in {max_terms} terms",
            SeriesConvergenceWarning,
            stacklevel=2,
        )
    out = total.reshape(z.shape) if z.ndim else total[0]
    if return_info:
        return out, k, converged.reshape(z.shape)
    return out


def h_dim(m: int, d: int) -> int:
    """Dimension of the space of degree-m spherical harmonics in R^d."""
    if m < 0:
        raise ValueError("m must be non-negative")
    if m == 0:
        return 1
    if m == 1:
        return d
    return comb(d + m - 1, d - 1) - comb(d + m - 3, d - 1)


def zonal_from_cos(m: int, t, d: int):
    """Zonal harmonic Z_m as a function of t = <u, v>.

    Normalized so that sum_m Z_m reproduces L^2 of the normalized sphere
    measure, hence Z_m(u, u) = h_m. d = 2 gives 2 cos(m theta) for m >= 1.
    """
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)
    if m == 0:
        return np.ones_like(t)
    if d == 2:
        return 2.0 * special.eval_chebyt(m, t)
    lam = (d - 2) / 2.0
    return h_dim(m, d) * special.eval_gegenbauer(m, lam, t) / special.eval_gegenbauer(m, lam, 1.0)


def zonal(m: int, u, v, d: int | None = None):
    """Z_m(u, v) for unit vectors u and v (last axis)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if d is None:
        d = u.shape[-1]
    nu = np.linalg.norm(u, axis=-1)
    nv = np.linalg.norm(v, axis=-1)
    if not (np.allclose(nu, 1.0, atol=1e-10) and np.allclose(nv, 1.0, atol=1e-10)):
        raise ValueError("zonal requires unit vectors")
    return zonal_from_cos(m, np.einsum("...i,...i->...", u, v), d)


def phi_m_s(m: int, r, s: float, d: int, *, tol=HYP_TOL, max_terms=HYP_MAX_TERMS):
    """Radial coefficient Phi_m^s(r) of the Poisson-kernel power expansion.

    Gamma(d/2) Gamma(m + (1+s) sigma) / (Gamma(m + d/2) Gamma((1+s) sigma))
    * r^m (1 - r^2)^((1-s) sigma) * 2F1(m + (1-s) sigma, 1/2 - s sigma; m + d/2; r^2)
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r >= 1):
        raise ValueError("r must lie in [0, 1)")
    sigma = (d - 1) / 2.0
    al = (1.0 + s) * sigma
    logpre = lgamma(d / 2.0) + lgamma(m + al) - lgamma(m + d / 2.0) - lgamma(al)
    f = hyp2f1_series(m + (1.0 - s) * sigma, 0.5 - s * sigma, m + d / 2.0, r**2, tol=tol, max_terms=max_terms)
    return np.exp(logpre) * r**m * (1.0 - r**2) ** ((1.0 - s) * sigma) * f


def sphere_cos_density(d: int):
    """Return (normalizing constant, exponent) of the law of <u, e> on S^{d-1}.

    The density is C (1 - t^2)^(sigma - 1) on [-1, 1], sigma = (d-1)/2.
    """
    sigma = (d - 1) / 2.0
    C = np.exp(lgamma(sigma + 0.5) - 0.5 * np.log(np.pi) - lgamma(sigma))
    return C, sigma - 1.0


def _sphere_average(f, d: int, epsabs=1e-14, epsrel=1e-12):
    C, e = sphere_cos_density(d)
    if e == 0.0:
        val, _ = integrate.quad(f, -1.0, 1.0, epsabs=epsabs, epsrel=epsrel, limit=400)
    else:
        val, _ = integrate.quad(f, -1.0, 1.0, weight="alg", wvar=(e, e), epsabs=epsabs, epsrel=epsrel, limit=400)
    return C * val


def spherical_Phi(s: float, zeta, d: int):
    """Radial eigenfunction Phi_s at hyperbolic distance zeta from the origin.

    Uses the 2F1 form with r = tanh(zeta / 2).
    """
    zeta = np.asarray(zeta, dtype=float)
    if np.any(zeta < 0):
        raise ValueError("zeta must be non-negative")
    return phi_m_s(0, np.tanh(zeta / 2.0), s, d)


def spherical_Phi_quadrature(s: float, zeta: float, d: int) -> float:
    """Sphere average of (cosh zeta - sinh zeta cos a)^(-sigma(1+s))."""
    sigma = (d - 1) / 2.0
    ch, sh = np.cosh(zeta), np.sinh(zeta)
    return _sphere_average(lambda t: (ch - sh * t) ** (-sigma * (1.0 + s)), d)


def Q_tilde(zeta, d: int, method: str = "auto"):
    """Sphere average of log(cosh zeta - sinh zeta cos a).

    ``method="auto"`` uses the closed forms for d = 2 (log((1 + cosh z)/2))
    and d = 3 (z coth z - 1), quadrature otherwise.
    """
    zeta = float(zeta)
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method != "quadrature" and d in (2, 3):
        if d == 2:
            return float(np.log((1.0 + np.cosh(zeta)) / 2.0))
        if zeta == 0:
            return 0.0
        return float(zeta / np.tanh(zeta) - 1.0)
    if method == "closed":
        raise ValueError("closed form only available for d in (2, 3)")
    ch, sh = np.cosh(zeta), np.sinh(zeta)
    return _sphere_average(lambda t: np.log(ch - sh * t), d)


def G_s(w, s: float, mode: str = "closed", n_terms: int = 100_000):
    """Evaluate G_s(-4 w (1 - w)) for d = 2.

    ``mode="closed"`` uses Gamma((s+1)/2)^2 / (Gamma(s/2 + w - 1/2) Gamma(s/2 - w + 1/2));
    ``mode="product"`` truncates the defining product
    (s-1)/2 prod_k (1 - z / (4 ((s-3)/2 + k)((s-1)/2 + k))) after ``n_terms`` factors.
    """
    if s <= 1:
        raise ValueError("G_s is defined for s > 1")
    w = np.asarray(w, dtype=float)
    if mode == "closed":
        g1 = s / 2.0 + w - 0.5
        g2 = s / 2.0 - w + 0.5
        if np.any((g1 <= 0) & (g1 == np.round(g1))) or np.any((g2 <= 0) & (g2 == np.round(g2))):
            raise ValueError("Gamma pole in closed form")
        return special.gamma((s + 1) / 2.0) ** 2 * special.rgamma(g1) * special.rgamma(g2)
    if mode == "product":
        z = -4.0 * w * (1.0 - w)
        k = np.arange(1, int(n_terms) + 1, dtype=float)
        den = 4.0 * ((s - 3) / 2.0 + k) * ((s - 1) / 2.0 + k)
        zf = np.atleast_1d(z)
        out = []
        for zi in zf.ravel():
            fac = 1.0 - zi / den
            sign = np.prod(np.sign(fac))
            out.append(sign * (s - 1) / 2.0 * np.exp(np.sum(np.log(np.abs(fac)))))
        out = np.array(out)
        return out.reshape(z.shape) if z.ndim else float(out[0])
    raise ValueError(f"unknown mode {mode!r}")
