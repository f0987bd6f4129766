"""Ball windows, point patterns and the k-th nearest-distance statistic.

A homogeneous Poisson point process with intensity ``theta`` is observed on a
closed Euclidean ball centred at the origin.  Everything downstream (the
shrinkage estimators, their gain, the simulation studies) consumes only two
things from an observed pattern: the point count and the squared distance of
the k-th closest point to the origin, clamped at the window boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BallWindow",
    "PointPattern",
    "SteinParams",
    "window_volume",
    "sample_pattern",
    "sample_squared_norms",
    "y_statistic",
    "rescale_to_unit",
]

_UNIT_RADIUS_TOL = 1e-12
_CONTAINMENT_RTOL = 1e-9


@dataclass(frozen=True)
class BallWindow:
    """Closed ball ``B(0, radius)`` in ``dimension`` Euclidean dimensions."""

    dimension: int
    radius: float = 1.0

    def __post_init__(self):
        if not isinstance(self.dimension, (int, np.integer)) or isinstance(self.dimension, bool):
            raise ValueError(f"dimension must be an integer, got {self.dimension!r}")
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if not (float(self.radius) > 0.0) or not math.isfinite(self.radius):
            raise ValueError(f"radius must be a positive finite real, got {self.radius!r}")

    @property
    def volume(self) -> float:
        """Lebesgue volume: pi^(d/2) / Gamma(d/2 + 1) * radius^d."""
        return window_volume(self)

    @property
    def is_unit(self) -> bool:
        return abs(self.radius - 1.0) <= _UNIT_RADIUS_TOL


def window_volume(window: BallWindow) -> float:
    """Volume of a ball window.

    For radius 1 this gives 2, pi, 4*pi/3 in dimensions 1, 2, 3.
    """
    d, w = window.dimension, float(window.radius)
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * w**d


@dataclass(frozen=True)
class PointPattern:
    """A finite point configuration inside a ball window.

    ``points`` has shape (n, d).  Order of the rows carries no meaning.
    """

    window: BallWindow
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, self.window.dimension)
        if pts.ndim != 2 or pts.shape[1] != self.window.dimension:
            raise ValueError(
                f"points must have shape (n, {self.window.dimension}), got {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        w = self.window.radius
        sq = np.einsum("ij,ij->i", pts, pts)
        if np.any(sq > (w * w) * (1.0 + _CONTAINMENT_RTOL)):
            worst = float(np.sqrt(sq.max()))
            raise ValueError(f"point with norm {worst} lies outside the window (radius {w})")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def squared_norms(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.points, self.points)


@dataclass(frozen=True)
class SteinParams:
    """Parameters (k, gamma, kappa) selecting one estimator in the family.

    ``k`` is the order of the nearest point used; ``gamma`` and ``kappa``
    shape the correction.  Family-specific ranges (kappa >= 2 for the
    exponential family; kappa > 0 and gamma in (0, 1/2) for the mollified
    linear family) are enforced by the family classes themselves.
    """

    k: int
    gamma: float
    kappa: float

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or isinstance(self.k, bool):
            raise ValueError(f"k must be an integer, got {self.k!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not (math.isfinite(self.gamma) and math.isfinite(self.kappa)):
            raise ValueError("gamma and kappa must be finite")


def sample_pattern(window: BallWindow, theta: float, rng: np.random.Generator) -> PointPattern:
    """Draw one realisation of the process restricted to ``window``.

    The count is Poisson(theta * |W|); given the count, points are i.i.d.
    uniform on the ball (uniform direction, radius = w * U^(1/d)).
    """
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    d, w = window.dimension, window.radius
    n = int(rng.poisson(theta * window.volume))
    radii = w * rng.random(n) ** (1.0 / d)
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    # a zero Gaussian vector has probability zero; guard the division anyway
    norms[norms == 0.0] = 1.0
    return PointPattern(window, g * (radii / norms)[:, None])


def sample_squared_norms(window: BallWindow, theta: float, rng: np.random.Generator) -> np.ndarray:
    """Squared norms of one pattern, skipping the (irrelevant) directions.

    Distributionally identical to ``sample_pattern(...).squared_norms``: the
    radial inverse-CDF construction is the same, only the isotropic angles are
    not materialised.  Used by the replication engines, where no estimator
    looks at anything but norms.
    """
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    n = int(rng.poisson(theta * window.volume))
    return window.radius**2 * rng.random(n) ** (2.0 / window.dimension)


def y_statistic(pattern: PointPattern, k: int) -> float:
    """Squared norm of the k-th closest point to the origin, clamped at 1.

    Returns 1.0 when the pattern holds fewer than ``k`` points (the k-th
    closest point of the underlying process then lies outside the unit
    window).  Requires a unit-radius window; rescale first otherwise.
    """
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool) or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k!r}")
    if not pattern.window.is_unit:
        raise ValueError(
            f"y_statistic requires a unit-radius window, got radius {pattern.window.radius}"
        )
    sq = pattern.squared_norms
    if sq.shape[0] < k:
        return 1.0
    return float(np.partition(sq, k - 1)[k - 1])


def rescale_to_unit(pattern: PointPattern) -> tuple[PointPattern, float]:
    """Map a pattern on B(0, w) to B(0, 1).

    Returns the rescaled pattern and the intensity scale factor w^d: a process
    with intensity theta on B(0, w) maps to one with intensity theta * w^d on
    the unit ball.
    """
    w = pattern.window.radius
    d = pattern.window.dimension
    unit = BallWindow(d, 1.0)
    return PointPattern(unit, pattern.points / w), w**d
