"""Point-process samplers on hyperbolic windows.

Poisson and uniform-dV samplers, independent thinning, translated lattices
and a determinantal sampler for discretized Berezin kernels.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator

from ._validation import check_dimension, check_positive, check_probability
from .berezin import KernelSpec, kernel_matrix
from .configuration import Configuration
from .geometry import ball_volume_dV, mobius_apply, radius_to_norm

__all__ = [
    "sinh_power_integral",
    "sample_radii",
    "sample_directions",
    "sample_uniform",
    "sample_poisson",
    "thin",
    "translated_lattice",
    "DiscreteKernel",
    "build_discrete_kernel",
    "sample_dpp",
    "dpp_inclusion_prob",
    "BerezinDPP",
]

logger = logging.getLogger(__name__)

CLIP_WARN = 1e-3


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, np.random.RandomState):
        return np.random.default_rng(rng.randint(0, 2**31 - 1))
    return np.random.default_rng(rng)


def sinh_power_integral(r, n: int):
    """Integral of sinh(t)^n over [0, r] by the standard reduction formula."""
    r = np.asarray(r, dtype=float)
    if n == 0:
        return r.copy()
    if n == 1:
        return np.cosh(r) - 1.0
    return np.sinh(r) ** (n - 1) * np.cosh(r) / n - (n - 1) / n * sinh_power_integral(r, n - 2)


def sample_radii(n: int, window_radius: float, d: int, rng=None) -> np.ndarray:
    """Hyperbolic radii with density proportional to sinh(r)^(d-1) on [0, R]."""
    rng = _rng(rng)
    u = rng.random(n)
    R = float(window_radius)
    if d == 2:
        return np.arccosh(1.0 + u * (np.cosh(R) - 1.0))
    total = sinh_power_integral(R, d - 1)
    target = u * total
    lo = np.zeros(n)
    hi = np.full(n, R)
    # bisection keeps the draw monotone in u and exactly reproducible
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = sinh_power_integral(mid, d - 1) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def sample_directions(n: int, d: int, rng=None) -> np.ndarray:
    rng = _rng(rng)
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_uniform(n: int, window_radius: float, d: int = 2, rng=None) -> Configuration:
    """n i.i.d. points with density dV restricted to the window."""
    rng = _rng(rng)
    d = check_dimension(d)
    r = sample_radii(n, window_radius, d, rng)
    pts = sample_directions(n, d, rng) * radius_to_norm(r)[:, None]
    return Configuration(pts, d, window_radius)


def sample_poisson(lam: float, window_radius: float, d: int = 2, rng=None) -> Configuration:
    """Poisson process of intensity lam * dV on the window."""
    lam = check_positive(lam, "lambda")
    R = check_positive(window_radius, "window_radius")
    rng = _rng(rng)
    n = int(rng.poisson(lam * ball_volume_dV(R, d)))
    return sample_uniform(n, R, d, rng)


def thin(cfg: Configuration, p: float, rng=None) -> Configuration:
    """Remove each point independently with probability p."""
    p = check_probability(p)
    rng = _rng(rng)
    keep = rng.random(len(cfg)) >= p
    return cfg.subset(np.flatnonzero(keep))


def translated_lattice(nuclei, noise_scale: float, tail: float = 1.0, rng=None, window_radius: float | None = None,
                       return_lengths: bool = False):
    """Independently perturb each nucleus by a random isometry.

    Each nucleus x is sent to phi_x(b) with b at hyperbolic distance L from 0
    in a uniform direction; phi_x(b) is then at distance exactly L from x.
    L = noise_scale * W with W ~ Weibull(tail), so tail = 1 is exponential.

    Args:
        nuclei: A NetTessellation, Configuration or (n, d) array.
        noise_scale: Scale of the translation length, >= 0.
        tail: Weibull shape parameter (larger means lighter tail).
        rng: Seed or generator.
        window_radius: Window of the returned configuration; defaults to the
            input window enlarged by the largest displacement.
        return_lengths: Also return the sampled translation lengths.
    """
    if noise_scale < 0:
        raise ValueError("noise_scale must be >= 0")
    check_positive(tail, "tail")
    rng = _rng(rng)
    if hasattr(nuclei, "nuclei_"):
        X, base_R = nuclei.nuclei_, nuclei.window_radius
    elif isinstance(nuclei, Configuration):
        X, base_R = nuclei.points, nuclei.window_radius
    else:
        X = np.asarray(nuclei, dtype=float)
        base_R = None
    n, d = X.shape
    L = noise_scale * rng.weibull(tail, size=n)
    b = sample_directions(n, d, rng) * radius_to_norm(L)[:, None]
    out = mobius_apply(X, b) if n else X.copy()
    if noise_scale == 0:
        out = X.copy()
    R = window_radius
    if R is None:
        from .geometry import distance_from_origin

        R = max(base_R or 0.0, float(distance_from_origin(out).max()) if n else 0.0) + 1e-9
        R = max(R, 1e-6)
    cfg = Configuration(out, d, R)
    return (cfg, L) if return_lengths else cfg


@dataclass
class DiscreteKernel:
    """Discretized kernel matrix with its spectral data.

    ``matrix`` is the (clipped) symmetric matrix used for sampling;
    ``raw_eigenvalues`` are those of the unclipped matrix.
    """

    matrix: np.ndarray
    weights: np.ndarray
    spec: KernelSpec
    normalization: float
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    raw_eigenvalues: np.ndarray = field(repr=False)
    clip_magnitude: float = 0.0

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def top_eigenvalue(self) -> float:
        return float(self.raw_eigenvalues[-1]) if self.n else 0.0

    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @classmethod
    def from_matrix(cls, K, spec: KernelSpec | None = None, clip: bool = True) -> "DiscreteKernel":
        """Wrap an arbitrary symmetric matrix (used by tests and small examples)."""
        K = np.asarray(K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError("K must be square")
        if not np.allclose(K, K.T, atol=1e-12):
            raise ValueError("K must be symmetric")
        spec = spec or KernelSpec(2, 1.0, normalization=1.0)
        return _finish_kernel(K, np.ones(K.shape[0]), spec, 1.0, clip)


def _finish_kernel(M, w, spec, norm, clip):
    M = 0.5 * (M + M.T)
    if M.shape[0]:
        lam, V = linalg.eigh(M)
    else:
        lam, V = np.zeros(0), np.zeros((0, 0))
    raw = lam.copy()
    clip_mag = 0.0
    if clip and lam.size:
        clipped = np.clip(lam, 0.0, 1.0)
        clip_mag = float(np.max(np.abs(clipped - lam)))
        if clip_mag > CLIP_WARN:
            warnings.warn(f"eigenvalue clip of magnitude {clip_mag:.3g} exceeds {CLIP_WARN:g}", RuntimeWarning,
                          stacklevel=3)
        if clip_mag > 0:
            logger.info("clipped eigenvalues into [0, 1], magnitude %.3g", clip_mag)
            M = (V * clipped) @ V.T
            M = 0.5 * (M + M.T)
        lam = clipped
    return DiscreteKernel(M, np.asarray(w, dtype=float), spec, float(norm), lam, V, raw, clip_mag)


def build_discrete_kernel(seeds: Configuration, spec: KernelSpec, weights="uniform", clip: bool = True,
                          rng=None, n_mc: int = 200_000) -> DiscreteKernel:
    """Discrete Berezin kernel M_ij = K_s(x_i, x_j) sqrt(w_i w_j) / N.

    Parameters
    ----------
    seeds : Configuration
        Seed points, ideally uniform in dV on the window.
    spec : KernelSpec
        Kernel parameters. The normalization N is ``spec.default_normalization()``;
        when that is None the top eigenvalue of the unnormalized matrix is used.
    weights : {"uniform", "monte-carlo"} or array_like
        Cell masses. "uniform" uses window volume / n; "monte-carlo"
        estimates the dV-mass of each seed's Voronoi cell with ``n_mc``
        uniform probes.
    clip : bool
        Clip eigenvalues into [0, 1] (warns if the clip exceeds 1e-3).
    """
    X = seeds.points
    n = X.shape[0]
    if spec.d != seeds.d:
        raise ValueError("kernel and seed dimensions differ")
    V = ball_volume_dV(seeds.window_radius, seeds.d)
    if isinstance(weights, str):
        if weights == "uniform":
            w = np.full(n, V / max(n, 1))
        elif weights == "monte-carlo":
            from .tessellation import nearest_index

            probes = sample_uniform(n_mc, seeds.window_radius, seeds.d, rng).points
            counts = np.bincount(nearest_index(X, probes), minlength=n)
            w = counts * V / n_mc
        else:
            raise ValueError(f"unknown weights {weights!r}")
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,) or np.any(w <= 0):
            raise ValueError("weights must be n positive numbers")
    K = kernel_matrix(X, X, spec)
    if not np.all(np.isfinite(K)):
        raise ValueError("non-finite kernel entries")
    sq = np.sqrt(w)
    M = sq[:, None] * K * sq[None, :]
    norm = spec.default_normalization()
    if norm is None:
        norm = float(linalg.eigvalsh(M, subset_by_index=[n - 1, n - 1])[0]) if n else 1.0
    return _finish_kernel(M / norm, w, spec, norm, clip)


def sample_dpp(K: DiscreteKernel, rng=None) -> np.ndarray:
    """Spectral sampler for the determinantal process with kernel K.

    Keeps eigenvector i with probability lambda_i, then draws points one at a
    time from the projection kernel spanned by the kept vectors.

    Returns:
        Sorted array of selected indices.
    """
    rng = _rng(rng)
    lam = K.eigenvalues
    if np.any(lam < -1e-12) or np.any(lam > 1 + 1e-12):
        raise ValueError("eigenvalues must lie in [0, 1]")
    keep = rng.random(lam.size) < lam
    Vk = K.eigenvectors[:, keep].copy()
    chosen = []
    while Vk.shape[1] > 0:
        k = Vk.shape[1]
        p = np.einsum("ij,ij->i", Vk, Vk) / k
        p = np.maximum(p, 0.0)
        p /= p.sum()
        i = int(rng.choice(p.size, p=p))
        chosen.append(i)
        j = int(np.argmax(np.abs(Vk[i])))
        col = Vk[:, j].copy()
        Vk = Vk - np.outer(col / col[i], Vk[i])
        Vk = np.delete(Vk, j, axis=1)
        if Vk.shape[1]:
            Vk, _ = linalg.qr(Vk, mode="economic")
    return np.array(sorted(chosen), dtype=int)


def dpp_inclusion_prob(K, subset) -> float:
    """P(subset is contained in the sample) = det K[subset, subset]."""
    M = K.matrix if isinstance(K, DiscreteKernel) else np.asarray(K, dtype=float)
    idx = np.asarray(list(subset), dtype=int)
    if idx.size == 0:
        return 1.0
    if np.any(idx < 0) or np.any(idx >= M.shape[0]):
        raise IndexError("subset index out of range")
    return float(np.linalg.det(M[np.ix_(idx, idx)]))


class BerezinDPP(BaseEstimator):
    """Berezin determinantal process on a window, discretized on uniform seeds.

    Parameters
    ----------
    d : int
    s : float
    window_radius : float
    n_seeds : int
    normalization : float or None
        Overrides the default (pi at s = 1/(d-1), the conjectured value for
        d = 2 and s >= 1, otherwise the discrete top eigenvalue).
    random_state : int, Generator or None

    Attributes
    ----------
    seeds_ : Configuration
    kernel_ : DiscreteKernel
    """

    def __init__(self, d=2, s=3.0, window_radius=4.0, n_seeds=4000, normalization=None, random_state=None):
        self.d = d
        self.s = s
        self.window_radius = window_radius
        self.n_seeds = n_seeds
        self.normalization = normalization
        self.random_state = random_state

    def fit(self, X=None, y=None):
        rng = _rng(self.random_state)
        spec = KernelSpec(self.d, self.s, self.normalization)
        if X is None:
            seeds = sample_uniform(int(self.n_seeds), self.window_radius, self.d, rng)
        else:
            seeds = X if isinstance(X, Configuration) else Configuration(X, self.d, self.window_radius)
        self.seeds_ = seeds
        self.kernel_ = build_discrete_kernel(seeds, spec)
        self._rng = rng
        return self

    def sample(self, random_state=None) -> Configuration:
        if not hasattr(self, "kernel_"):
            raise AttributeError("call fit before sample")
        rng = self._rng if random_state is None else _rng(random_state)
        idx = sample_dpp(self.kernel_, rng)
        return self.seeds_.subset(idx)
