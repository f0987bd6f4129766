"""Monte-Carlo gain and mean-squared-error of the shrinkage estimators.

The relative MSE improvement of the order-k estimator over the maximum
likelihood estimator is

    gain = 16 / (theta * d^2 * |W|) * E[G(Y_k)]

where ``G`` is the family's gain kernel and ``Y_k`` the clamped squared k-th
nearest distance (``MSE = theta/|W| - 16/(d^2 |W|^2) * E[G(Y_k)]``).  All
expectations here ride on the Gamma fast path of :mod:`steinpp.distributions`.

For the exponential family the kernel is a quadratic in gamma,

    G = gamma * kappa * a(Y) - gamma^2 * kappa^2 * b(Y),
    a(y) = y (1-y)^(kappa-2) (1 - kappa y),   b(y) = y^2 (1-y)^(2 kappa - 2),

so the gamma maximising the sampled objective is the closed form
``gamma* = mean(a) / (2 kappa mean(b))`` and the maximised kernel expectation
is ``mean(a)^2 / (4 mean(b))`` on the same draws — an algebraic identity this
module preserves exactly (same draws, same accumulation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import KthDistanceLaw, sample_y
from .moments import RunningMoments
from .phi import ExponentialPhi
from .pointprocess import BallWindow

__all__ = [
    "GainEstimate",
    "GammaStarEstimate",
    "OptimizedGainEstimate",
    "DegenerateDenominatorError",
    "InvalidIntervalError",
    "expected_gain",
    "stein_mse",
    "gamma_star",
    "optimized_gain",
    "datadriven_objective",
    "datadriven_optimized",
    "confidence_interval",
    "gain_scale",
    "mse_scale",
    "quadratic_terms",
    "kernel_values",
]

DENOMINATOR_FLOOR = 1e-15
INTERVAL_FLOOR = 1e-3
_CHUNK = 1 << 19


class DegenerateDenominatorError(ValueError):
    """The gamma* denominator vanished (Y sits at 1 almost surely)."""


class InvalidIntervalError(ValueError):
    """Flooring the confidence interval would move past its midpoint."""


@dataclass(frozen=True)
class GainEstimate:
    """Monte-Carlo estimate of an expectation, with its standard error."""

    value: float
    std_error: float
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples}")
        if self.std_error < 0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")


@dataclass(frozen=True)
class GammaStarEstimate:
    """Closed-form optimal gamma with its numerator/denominator estimates."""

    value: float
    numerator: float
    denominator: float
    n_samples: int


@dataclass(frozen=True)
class OptimizedGainEstimate:
    """Gain at the closed-form optimal gamma, on one fixed set of draws."""

    gain: GainEstimate
    gamma_star: float
    numerator: float
    denominator: float


def gain_scale(theta: float, window: BallWindow) -> float:
    """16 / (theta * d^2 * |W|), the kernel-expectation-to-gain factor."""
    d = window.dimension
    return 16.0 / (theta * d * d * window.volume)


def mse_scale(window: BallWindow) -> float:
    """16 / (d^2 * |W|^2), the kernel-expectation-to-MSE factor."""
    d = window.dimension
    vol = window.volume
    return 16.0 / (d * d * vol * vol)


def kernel_values(family, y: np.ndarray) -> np.ndarray:
    """Gain-kernel values G(y), using the family's closed form if it has one."""
    if isinstance(family, ExponentialPhi):
        return family.gain_kernel_closed(y)
    phi, d1, d2 = family.eval(y)
    return -y * (d1 + y * d2) / phi


def quadratic_terms(y: np.ndarray, kappa: float, weights: np.ndarray | None = None):
    """Sample means of a(Y) and b(Y) (optionally weighted), see module docs."""
    om = 1.0 - y
    p = om ** (kappa - 2.0)
    a = y * p * (1.0 - kappa * y)
    b = y * y * p * p * om * om
    if weights is not None:
        a = a * weights
        b = b * weights
    return float(a.mean()), float(b.mean())


def _validate_common(theta, n_samples, window):
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    if not window.is_unit:
        raise ValueError("the estimator family is defined on the unit ball; rescale first")


def _kernel_moments(k, family, theta, window, n_samples, rng) -> RunningMoments:
    law = KthDistanceLaw(k, window, theta)
    acc = RunningMoments()
    done = 0
    while done < n_samples:
        n = min(_CHUNK, n_samples - done)
        y = sample_y(law, rng, size=n)
        acc.merge(RunningMoments.from_array(kernel_values(family, y)))
        done += n
    return acc


def expected_gain(k, family, theta, window, n_samples, rng) -> GainEstimate:
    """Relative MSE gain over the MLE at the given parameters."""
    _validate_common(theta, n_samples, window)
    acc = _kernel_moments(k, family, theta, window, n_samples, rng)
    scale = gain_scale(theta, window)
    return GainEstimate(scale * acc.mean, scale * acc.std_error, acc.count)


def stein_mse(k, family, theta, window, n_samples, rng) -> GainEstimate:
    """Mean squared error of the order-k estimator (MLE's is theta/|W|)."""
    _validate_common(theta, n_samples, window)
    acc = _kernel_moments(k, family, theta, window, n_samples, rng)
    scale = mse_scale(window)
    return GainEstimate(
        theta / window.volume - scale * acc.mean, scale * acc.std_error, acc.count
    )


def gamma_star(k, kappa, theta, window, n_samples, rng) -> GammaStarEstimate:
    """Closed-form optimal gamma for the exponential family, from one draw.

    Both expectations use the same samples (common random numbers).  Raises
    :class:`DegenerateDenominatorError` when the denominator estimate falls
    below 1e-15, which happens when Y equals 1 almost surely (k far above
    theta * |W|).
    """
    _validate_common(theta, n_samples, window)
    if kappa < 2.0:
        raise ValueError(f"kappa must be >= 2, got {kappa}")
    law = KthDistanceLaw(k, window, theta)
    y = sample_y(law, rng, size=n_samples)
    a, b = quadratic_terms(y, kappa)
    den = 2.0 * kappa * b
    if den < DENOMINATOR_FLOOR:
        raise DegenerateDenominatorError(
            f"gamma* denominator {den:.3e} below {DENOMINATOR_FLOOR} at k={k}, kappa={kappa}"
        )
    return GammaStarEstimate(a / den, a, den, n_samples)


def optimized_gain(k, kappa, theta, window, n_samples, rng) -> OptimizedGainEstimate:
    """Gain maximised over gamma, as mean(a)^2 / (4 mean(b)) on one draw.

    Equals ``expected_gain`` evaluated at gamma* on the same draws, exactly
    (same quadratic, same samples); the standard error is taken from the
    per-sample kernel values at gamma*.
    """
    _validate_common(theta, n_samples, window)
    if kappa < 2.0:
        raise ValueError(f"kappa must be >= 2, got {kappa}")
    law = KthDistanceLaw(k, window, theta)
    y = sample_y(law, rng, size=n_samples)
    a, b = quadratic_terms(y, kappa)
    if 2.0 * kappa * b < DENOMINATOR_FLOOR:
        raise DegenerateDenominatorError(
            f"gamma* denominator below {DENOMINATOR_FLOOR} at k={k}, kappa={kappa}"
        )
    gstar = a / (2.0 * kappa * b)
    scale = gain_scale(theta, window)
    g = kernel_values(ExponentialPhi(gstar, kappa), y)
    acc = RunningMoments.from_array(g)
    value = scale * (a * a / (4.0 * b))
    return OptimizedGainEstimate(
        GainEstimate(value, scale * acc.std_error, n_samples), gstar, a, 2.0 * kappa * b
    )


def confidence_interval(theta_hat, rho, window) -> tuple[float, float]:
    """Interval theta_hat +- rho * sqrt(theta_hat / |W|), floored at 1e-3.

    Raises :class:`InvalidIntervalError` if the floor would move the lower
    endpoint past the midpoint.
    """
    if not theta_hat > 0:
        raise ValueError(f"theta_hat must be > 0, got {theta_hat}")
    if rho < 0:
        raise ValueError(f"rho must be >= 0, got {rho}")
    half = rho * math.sqrt(theta_hat / window.volume)
    lo, hi = theta_hat - half, theta_hat + half
    if lo < INTERVAL_FLOOR:
        if INTERVAL_FLOOR > theta_hat:
            raise InvalidIntervalError(
                f"flooring the interval [{lo:.4g}, {hi:.4g}] at {INTERVAL_FLOOR} "
                f"would pass its midpoint {theta_hat:.4g}"
            )
        lo = INTERVAL_FLOOR
    return lo, hi


def _draw_interval_samples(k, theta_hat, rho, window, n_samples, rng):
    """Draw (U, Y(U)) with U uniform on the floored confidence interval."""
    lo, hi = confidence_interval(theta_hat, rho, window)
    u = rng.uniform(lo, hi, n_samples)
    z = rng.standard_gamma(k, n_samples) / (window.volume * u)
    y = np.minimum(z ** (2.0 / window.dimension), 1.0)
    return u, y, hi - lo


def datadriven_objective(k, family, theta_hat, rho, window, n_samples, rng) -> GainEstimate:
    """Average gain over the confidence interval Theta(theta_hat, rho).

    Estimates ``16/(d^2 |W|) * (hi - lo) * E[G(Y_k(U)) / U]`` with U uniform
    on the (floored) interval; each sample draws U first, then Y from the
    Gamma fast path at intensity U.  For rho = 0 this degenerates to the
    point objective, i.e. ``expected_gain`` at theta_hat.
    """
    if rho == 0:
        return expected_gain(k, family, theta_hat, window, n_samples, rng)
    _validate_common(theta_hat, n_samples, window)
    u, y, length = _draw_interval_samples(k, theta_hat, rho, window, n_samples, rng)
    d = window.dimension
    scale = 16.0 / (d * d * window.volume) * length
    acc = RunningMoments.from_array(kernel_values(family, y) / u)
    return GainEstimate(scale * acc.mean, scale * acc.std_error, n_samples)


def datadriven_optimized(k, kappa, theta_hat, rho, window, n_samples, rng) -> OptimizedGainEstimate:
    """Interval objective maximised over gamma (closed form under U-weights)."""
    if kappa < 2.0:
        raise ValueError(f"kappa must be >= 2, got {kappa}")
    if rho == 0:
        return optimized_gain(k, kappa, theta_hat, window, n_samples, rng)
    _validate_common(theta_hat, n_samples, window)
    u, y, length = _draw_interval_samples(k, theta_hat, rho, window, n_samples, rng)
    w = 1.0 / u
    a, b = quadratic_terms(y, kappa, weights=w)
    if 2.0 * kappa * b < DENOMINATOR_FLOOR:
        raise DegenerateDenominatorError(
            f"gamma* denominator below {DENOMINATOR_FLOOR} at k={k}, kappa={kappa}, rho={rho}"
        )
    gstar = a / (2.0 * kappa * b)
    d = window.dimension
    scale = 16.0 / (d * d * window.volume) * length
    g = kernel_values(ExponentialPhi(gstar, kappa), y) * w
    acc = RunningMoments.from_array(g)
    value = scale * (a * a / (4.0 * b))
    return OptimizedGainEstimate(
        GainEstimate(value, scale * acc.std_error, n_samples), gstar, a, 2.0 * kappa * b
    )
