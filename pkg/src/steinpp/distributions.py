"""Random variate generation and the exact law of the k-th nearest distance.

For a homogeneous Poisson process with intensity ``theta`` on R^d, the volume
content ``v_d * theta * ||X_(k)||^d`` of the ball through the k-th closest
point is Gamma(k, 1).  Hence ``||X_(k)||^2 = Z^(2/d)`` with
``Z ~ Gamma(shape=k, rate=v_d * theta)``, which makes expectations of the gain
kernel cheap to estimate without simulating any point pattern.  This module is
that fast path; :mod:`steinpp.pointprocess` is the slow, pattern-level one.

Note on the source density: a direct change of variables gives

    f(t) = (d/2) * rate^k * t^(k*d/2 - 1) * exp(-rate * t^(d/2)) / (k-1)!

with ``rate = v_d * theta`` and ``v_d = pi^(d/2) / Gamma(d/2 + 1) * w^d``.
The negative sign in the exponent and the division by Gamma(d/2 + 1) are both
forced by normalisation (and by the Gamma representation itself); see
``kth_distance_sq_pdf``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaln

from .pointprocess import BallWindow

__all__ = [
    "KthDistanceLaw",
    "sample_gamma",
    "sample_poisson",
    "sample_exponential",
    "sample_kth_distance_sq",
    "kth_distance_sq_pdf",
    "kth_distance_sq_cdf",
    "sample_y",
]


@dataclass(frozen=True)
class KthDistanceLaw:
    """Law of the squared distance to the k-th closest process point."""

    k: int
    window: BallWindow
    theta: float

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or isinstance(self.k, bool) or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k!r}")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")

    @property
    def dimension(self) -> int:
        return self.window.dimension

    @property
    def rate(self) -> float:
        """Gamma rate v_d * theta."""
        return self.window.volume * self.theta


def _require_positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")


def sample_gamma(shape: float, rate: float, rng: np.random.Generator, size=None):
    """Gamma variates with the given shape and rate (mean shape/rate)."""
    _require_positive("shape", shape)
    _require_positive("rate", rate)
    return rng.gamma(shape, 1.0 / rate, size=size)


def sample_poisson(mean: float, rng: np.random.Generator, size=None):
    """Poisson counts; exact for all means used here (numpy's generator)."""
    _require_positive("mean", mean)
    return rng.poisson(mean, size=size)


def sample_exponential(rate: float, rng: np.random.Generator, size=None):
    """Exponential variates with the given rate (mean 1/rate)."""
    _require_positive("rate", rate)
    return rng.exponential(1.0 / rate, size=size)


def sample_kth_distance_sq(law: KthDistanceLaw, rng: np.random.Generator, size=None):
    """Draw ||X_(k)||^2 as Z^(2/d) with Z ~ Gamma(k, v_d * theta)."""
    z = rng.gamma(law.k, 1.0 / law.rate, size=size)
    return z ** (2.0 / law.dimension)


def kth_distance_sq_pdf(law: KthDistanceLaw, t):
    """Density of ||X_(k)||^2 at ``t`` (vectorised; zero for t < 0).

    Evaluated in log space so large k and rates are safe.  At t = 0 the
    density is 0 when k*d > 2, finite when k*d == 2 and +inf when k*d < 2
    (still integrable).
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    d, k, rate = law.dimension, law.k, law.rate
    out = np.zeros_like(t)
    pos = t > 0
    tp = t[pos]
    log_pdf = (
        np.log(d / 2.0)
        + k * np.log(rate)
        + (k * d / 2.0 - 1.0) * np.log(tp)
        - rate * tp ** (d / 2.0)
        - gammaln(k)
    )
    out[pos] = np.exp(log_pdf)
    power = k * d / 2.0 - 1.0
    if power == 0.0:
        out[t == 0] = d / 2.0 * rate**k / np.exp(gammaln(k))
    elif power < 0.0:
        out[t == 0] = np.inf
    return float(out[0]) if scalar else out


def kth_distance_sq_cdf(law: KthDistanceLaw, t):
    """CDF of ||X_(k)||^2: regularised incomplete Gamma P(k, rate * t^(d/2))."""
    t = np.asarray(t, dtype=float)
    z = np.where(t > 0, t, 0.0) ** (law.dimension / 2.0)
    return gammainc(law.k, law.rate * z)


def sample_y(law: KthDistanceLaw, rng: np.random.Generator, size=None):
    """Draw the clamped statistic min(||X_(k)||^2, 1); unit windows only."""
    if not law.window.is_unit:
        raise ValueError(
            f"sample_y requires a unit-radius window, got radius {law.window.radius}"
        )
    return np.minimum(sample_kth_distance_sq(law, rng, size=size), 1.0)
