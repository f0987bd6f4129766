"""Sample-average search for the gain-maximising (k, gamma, kappa).

For each candidate k the kernel expectation is a quadratic in gamma, so gamma
is eliminated in closed form and only kappa needs a line search: a coarse grid
followed by golden-section refinement, all on one fixed set of draws per
optimisation pass (common random numbers).  Draws are coupled across k by
building Gamma variates from shared exponential increments, which makes the
argmax over k stable as well.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .gain import (
    DegenerateDenominatorError,
    DENOMINATOR_FLOOR,
    GainEstimate,
    confidence_interval,
    datadriven_optimized,
    gain_scale,
    kernel_values,
    optimized_gain,
    quadratic_terms,
)
from .moments import RunningMoments
from .phi import ExponentialPhi
from .pointprocess import BallWindow, SteinParams

__all__ = [
    "OptimizationResult",
    "DEFAULT_KAPPA_GRID",
    "k_search_range",
    "optimize_at_theta",
    "optimize_datadriven",
    "optimize_gamma_kappa",
]

DEFAULT_KAPPA_GRID = tuple(np.arange(2.0, 12.0001, 0.5))
KAPPA_TOL = 1e-2
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class OptimizationResult:
    """Maximising parameters, the objective there, and search bookkeeping."""

    params: SteinParams
    objective: GainEstimate
    evaluations: int
    k_range: tuple[int, int]
    skipped_k: tuple[int, ...] = ()


def k_search_range(n: int) -> tuple[int, int]:
    """Candidate k values around the expected count n: floor(0.75 n)..floor(1.2 n)."""
    return max(1, math.floor(0.75 * n)), max(1, math.floor(1.2 * n))


def _draw_y_matrix(rng, n_samples, k_lo, k_hi, window, theta=None, interval=None):
    """Y draws for every k in [k_lo, k_hi] plus the 1/U weights (or None).

    Gamma(k) variates share exponential increments across k (cumulative sums),
    so columns are coupled.  With ``interval`` given, each row first draws U
    uniform on it and uses rate |W| * U; otherwise the rate is |W| * theta.
    """
    d = window.dimension
    vol = window.volume
    n_k = k_hi - k_lo + 1
    y = np.empty((n_samples, n_k))
    weights = np.empty(n_samples) if interval is not None else None
    chunk = max(1, _CHUNK_ELEMENTS // k_hi)
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        if interval is not None:
            u = rng.uniform(interval[0], interval[1], n)
            rate = vol * u
            weights[done : done + n] = 1.0 / u
        else:
            rate = vol * theta
        e = rng.standard_exponential((n, k_hi))
        z = np.cumsum(e, axis=1)[:, k_lo - 1 :]
        if interval is not None:
            z /= rate[:, None]
        else:
            z /= rate
        np.minimum(z ** (2.0 / d), 1.0, out=y[done : done + n])
        done += n
    return y, weights


class _KappaSearch:
    """Coarse-grid + golden-section kappa search over one column of draws."""

    def __init__(self, y, weights, kappa_grid):
        self.y = y
        self.weights = weights
        self.grid = kappa_grid
        self.evaluations = 0

    def objective(self, kappa):
        self.evaluations += 1
        a, b = quadratic_terms(self.y, kappa, weights=self.weights)
        if 2.0 * kappa * b < DENOMINATOR_FLOOR:
            return -math.inf, a, b
        return a * a / (4.0 * b), a, b

    def run(self):
        """Return (kappa, gamma_star, value, a, b) or None if degenerate."""
        grid = self.grid
        vals = np.array([self.objective(kap)[0] for kap in grid])
        i = int(np.argmax(vals))
        if not np.isfinite(vals[i]):
            return None
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        kappa = self._golden(lo, hi)
        value, a, b = self.objective(kappa)
        if not np.isfinite(value):
            return None
        return kappa, a / (2.0 * kappa * b), value, a, b

    def _golden(self, lo, hi):
        c = hi - _INVPHI * (hi - lo)
        d = lo + _INVPHI * (hi - lo)
        fc = self.objective(c)[0]
        fd = self.objective(d)[0]
        while hi - lo > KAPPA_TOL:
            if fc > fd:
                hi, d, fd = d, c, fc
                c = hi - _INVPHI * (hi - lo)
                fc = self.objective(c)[0]
            else:
                lo, c, fc = c, d, fd
                d = lo + _INVPHI * (hi - lo)
                fd = self.objective(d)[0]
        return 0.5 * (lo + hi)


def _column_result(y, weights, kappa_grid, value_scale):
    """Best (kappa, gamma) for one k column, with the scaled value and its se."""
    search = _KappaSearch(y, weights, kappa_grid)
    out = search.run()
    if out is None:
        return None, search.evaluations
    kappa, gstar, value, _, _ = out
    g = kernel_values(ExponentialPhi(gstar, kappa), y)
    if weights is not None:
        g = g * weights
    acc = RunningMoments.from_array(g)
    return (
        {
            "kappa": float(kappa),
            "gamma": float(gstar),
            "value": value_scale * value,
            "std_error": value_scale * acc.std_error,
        },
        search.evaluations,
    )


def _pick_k(ks, results):
    """Argmax over k; ties within one combined standard error go to smaller k."""
    values = [r["value"] for r in results]
    best = int(np.argmax(values))
    for i in range(best):
        if values[i] >= values[best] - (results[i]["std_error"] + results[best]["std_error"]):
            return i
    return best


def _search(ks, y_matrix, weights, value_scale, kappa_grid, threads):
    def task(j):
        return _column_result(y_matrix[:, j], weights, kappa_grid, value_scale)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(task, range(len(ks))))
    else:
        outcomes = [task(j) for j in range(len(ks))]

    evaluations = sum(e for _, e in outcomes)
    kept_idx = [j for j, (r, _) in enumerate(outcomes) if r is not None]
    skipped = tuple(int(ks[j]) for j, (r, _) in enumerate(outcomes) if r is None)
    if skipped:
        warnings.warn(
            f"skipped k cells with degenerate gamma* denominator: {skipped}",
            RuntimeWarning,
            stacklevel=3,
        )
    if not kept_idx:
        raise DegenerateDenominatorError("every candidate k had a degenerate denominator")
    results = [outcomes[j][0] for j in kept_idx]
    pick = _pick_k([int(ks[j]) for j in kept_idx], results)
    j = kept_idx[pick]
    return int(ks[j]), results[pick], evaluations, skipped


def optimize_at_theta(
    theta: float,
    window: BallWindow,
    n_samples: int = 50_000,
    kappa_grid=None,
    rng: np.random.Generator | None = None,
    n_confirm: int | None = 500_000,
    threads: int = 1,
) -> OptimizationResult:
    """Maximise the gain over (k, gamma, kappa) at a known intensity.

    k runs over floor(0.75 n)..floor(1.2 n) with n = round(theta |W|) (n >= 2
    required); kappa over the coarse grid then golden-section; gamma by closed
    form.  A two-stage scheme searches at ``n_samples`` draws and, when
    ``n_confirm`` is set, re-estimates gamma* and the objective at the chosen
    (k, kappa) on a fresh, larger draw.
    """
    if rng is None:
        raise ValueError("an explicit random generator is required")
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    n = round(theta * window.volume)
    if n < 2:
        raise ValueError(f"round(theta |W|) must be >= 2, got {n}")
    if not window.is_unit:
        raise ValueError("optimisation requires the unit window; rescale first")
    kappa_grid = DEFAULT_KAPPA_GRID if kappa_grid is None else tuple(kappa_grid)
    k_lo, k_hi = k_search_range(n)
    ks = np.arange(k_lo, k_hi + 1)
    y, _ = _draw_y_matrix(rng, n_samples, k_lo, k_hi, window, theta=theta)
    scale = gain_scale(theta, window)
    k, column, evaluations, skipped = _search(ks, y, None, scale, kappa_grid, threads)
    if n_confirm is not None:
        confirm = optimized_gain(k, column["kappa"], theta, window, n_confirm, rng)
        params = SteinParams(k, confirm.gamma_star, column["kappa"])
        objective = confirm.gain
        evaluations += 1
    else:
        params = SteinParams(k, column["gamma"], column["kappa"])
        objective = GainEstimate(column["value"], column["std_error"], n_samples)
    return OptimizationResult(params, objective, evaluations, (k_lo, k_hi), skipped)


def optimize_datadriven(
    theta_hat: float,
    rho: float,
    window: BallWindow,
    n_samples: int = 50_000,
    kappa_grid=None,
    rng: np.random.Generator | None = None,
    n_confirm: int | None = None,
    threads: int = 1,
) -> OptimizationResult:
    """Maximise the interval-averaged gain around an estimated intensity.

    Same search shape as :func:`optimize_at_theta` with n = round(theta_hat
    |W|) (clamped below at 1), the objective replaced by the confidence
    interval average; the closed form for gamma applies with the 1/U weights.
    """
    if rng is None:
        raise ValueError("an explicit random generator is required")
    if rho == 0:
        n = round(theta_hat * window.volume)
        if n >= 2:
            return optimize_at_theta(
                theta_hat, window, n_samples, kappa_grid, rng, n_confirm, threads
            )
    if not theta_hat > 0:
        raise ValueError(f"theta_hat must be > 0, got {theta_hat}")
    if not window.is_unit:
        raise ValueError("optimisation requires the unit window; rescale first")
    kappa_grid = DEFAULT_KAPPA_GRID if kappa_grid is None else tuple(kappa_grid)
    n = round(theta_hat * window.volume)
    k_lo, k_hi = k_search_range(n)
    ks = np.arange(k_lo, k_hi + 1)
    if rho == 0:
        y, weights = _draw_y_matrix(rng, n_samples, k_lo, k_hi, window, theta=theta_hat)
        scale = gain_scale(theta_hat, window)
    else:
        interval = confidence_interval(theta_hat, rho, window)
        y, weights = _draw_y_matrix(rng, n_samples, k_lo, k_hi, window, interval=interval)
        d = window.dimension
        scale = 16.0 / (d * d * window.volume) * (interval[1] - interval[0])
    k, column, evaluations, skipped = _search(ks, y, weights, scale, kappa_grid, threads)
    if n_confirm is not None:
        confirm = datadriven_optimized(
            k, column["kappa"], theta_hat, rho, window, n_confirm, rng
        )
        params = SteinParams(k, confirm.gamma_star, column["kappa"])
        objective = confirm.gain
        evaluations += 1
    else:
        params = SteinParams(k, column["gamma"], column["kappa"])
        objective = GainEstimate(column["value"], column["std_error"], n_samples)
    return OptimizationResult(params, objective, evaluations, (k_lo, k_hi), skipped)


def optimize_gamma_kappa(
    k: int,
    theta: float,
    window: BallWindow,
    n_samples: int = 50_000,
    kappa_grid=None,
    rng: np.random.Generator | None = None,
    n_confirm: int | None = None,
    threads: int = 1,
) -> OptimizationResult:
    """Maximise the gain over (gamma, kappa) with k held fixed."""
    if rng is None:
        raise ValueError("an explicit random generator is required")
    if not theta > 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    if not window.is_unit:
        raise ValueError("optimisation requires the unit window; rescale first")
    kappa_grid = DEFAULT_KAPPA_GRID if kappa_grid is None else tuple(kappa_grid)
    y, _ = _draw_y_matrix(rng, n_samples, k, k, window, theta=theta)
    scale = gain_scale(theta, window)
    column, evaluations = _column_result(y[:, 0], None, kappa_grid, scale)
    if column is None:
        raise DegenerateDenominatorError(f"degenerate denominator at fixed k={k}")
    if n_confirm is not None:
        confirm = optimized_gain(k, column["kappa"], theta, window, n_confirm, rng)
        params = SteinParams(k, confirm.gamma_star, column["kappa"])
        objective = confirm.gain
        evaluations += 1
    else:
        params = SteinParams(k, column["gamma"], column["kappa"])
        objective = GainEstimate(column["value"], column["std_error"], n_samples)
    return OptimizationResult(params, objective, evaluations, (k, k))
