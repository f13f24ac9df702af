"""Finite point configurations in a hyperbolic window."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_ball_points, check_dimension, check_positive
from .geometry import distance_from_origin, radius_to_norm

WINDOW_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class Configuration:
    """Points of the Poincare ball inside the hyperbolic window B(0, window_radius).

    Parameters
    ----------
    points : array_like, shape (n, d)
    d : int
    window_radius : float
        Hyperbolic radius of the window about the origin.
    """

    points: np.ndarray
    d: int
    window_radius: float

    def __post_init__(self):
        d = check_dimension(self.d)
        R = check_positive(self.window_radius, "window_radius")
        pts = check_ball_points(self.points, d=d)
        if len(pts):
            if np.any(distance_from_origin(pts) > R + WINDOW_SLACK):
                raise ValueError("points outside the window")
            if len(np.unique(pts, axis=0)) != len(pts):
                raise ValueError("points must be pairwise distinct")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "window_radius", R)

    def __len__(self):
        return self.points.shape[0]

    @property
    def euclidean_radius(self) -> float:
        return float(radius_to_norm(self.window_radius))

    def subset(self, idx) -> "Configuration":
        return Configuration(self.points[np.asarray(idx, dtype=int)], self.d, self.window_radius)

    def core_mask(self, margin: float = 2.0) -> np.ndarray:
        """Points at hyperbolic distance <= window_radius - margin from 0."""
        if len(self) == 0:
            return np.zeros(0, dtype=bool)
        return distance_from_origin(self.points) <= self.window_radius - margin

    def to_dict(self) -> dict:
        return {
            "d": int(self.d),
            "window_radius": float(self.window_radius),
            "points": [[float(v) for v in row] for row in self.points],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Configuration":
        for key in ("d", "window_radius", "points"):
            if key not in data:
                raise ValueError(f"configuration is missing {key!r}")
        d = int(data["d"])
        pts = np.asarray(data["points"], dtype=float).reshape(-1, d)
        return cls(pts, d, float(data["window_radius"]))

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (
            self.d == other.d
            and self.window_radius == other.window_radius
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
        )
