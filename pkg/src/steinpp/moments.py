"""Streaming mean/variance accumulation with associative merging.

Single-pass Welford/Chan updates so that replication batches can be computed
independently (one per worker substream) and merged in a fixed order; the
merge is exact in exact arithmetic and order-stable here because callers
always merge in batch order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["RunningMoments"]


@dataclass
class RunningMoments:
    """Count, mean and centred second moment (M2) of a stream of reals."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_array(cls, values: np.ndarray) -> "RunningMoments":
        values = np.asarray(values, dtype=float)
        n = int(values.size)
        if n == 0:
            return cls()
        mu = float(values.mean())
        return cls(count=n, mean=mu, m2=float(np.sum((values - mu) ** 2)))

    def update(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        """Combine two disjoint streams (Chan et al. pairwise update)."""
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return self
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / n
        self.m2 += other.m2 + delta * delta * self.count * other.count / n
        self.count = n
        return self

    @property
    def variance(self) -> float:
        """Sample variance (ddof=1)."""
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    @property
    def variance_population(self) -> float:
        """Population variance (ddof=0)."""
        if self.count == 0:
            return 0.0
        return self.m2 / self.count

    @property
    def std_error(self) -> float:
        """Standard error of the mean, sample-sd convention."""
        if self.count < 2:
            return 0.0
        return math.sqrt(self.variance / self.count)
