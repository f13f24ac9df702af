"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

# Points closer than this to the unit sphere are rejected: [x, a]^2 loses
# all significant digits there.
BOUNDARY_TOL = 1e-9


def check_ball_points(X, *, d: int | None = None, allow_empty: bool = True, name: str = "X") -> np.ndarray:
    """Validate an array of Poincare-ball coordinates.

    Args:
        X: Array-like of shape (n, d), or (d,) for a single point.
        d: Expected dimension, if known.
        allow_empty: Whether n = 0 is acceptable.
        name: Name used in error messages.

    Returns:
        A float64 array of shape (n, d).

    Raises:
        ValueError: On wrong shape, non-finite entries, dimension below 2 or
            points too close to (or outside) the unit sphere.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (n, d), got shape {arr.shape}")
    if arr.shape[0] == 0:
        if not allow_empty:
            raise ValueError(f"{name} must contain at least one point")
        if d is not None and arr.shape[1] not in (0, d):
            raise ValueError(f"{name} has dimension {arr.shape[1]}, expected {d}")
        return arr.reshape(0, d if d is not None else arr.shape[1])
    if arr.shape[1] < 2:
        raise ValueError(f"{name} must have dimension >= 2, got {arr.shape[1]}")
    if d is not None and arr.shape[1] != d:
        raise ValueError(f"{name} has dimension {arr.shape[1]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms > 1.0 - BOUNDARY_TOL):
        raise ValueError(f"{name} has points with norm > 1 - {BOUNDARY_TOL:g}")
    return arr


def check_point(x, *, d: int | None = None, name: str = "x") -> np.ndarray:
    """Validate a single ball point and return it as a 1-D array."""
    return check_ball_points(np.asarray(x, dtype=float).reshape(1, -1), d=d, allow_empty=False, name=name)[0]


def check_positive(value, name: str, *, strict: bool = True) -> float:
    v = float(value)
    if not np.isfinite(v) or (v <= 0 if strict else v < 0):
        raise ValueError(f"{name} must be {'positive' if strict else 'non-negative'}, got {value!r}")
    return v


def check_probability(p, name: str = "p") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def check_dimension(d) -> int:
    if int(d) != d or d < 2:
        raise ValueError(f"dimension d must be an integer >= 2, got {d!r}")
    return int(d)
