"""Replication studies that regenerate the gain tables and curves as CSV rows.

Every study is a pure function of an :class:`ExperimentConfig`; rerunning with
the same config (seed included) yields byte-identical CSV.  Randomness is
organised as one substream per (study, cell, batch/task), derived from the
master seed with ``spawn_key`` tuples, so results are independent of the
worker count and batches can run on a thread pool.

Gain conventions: the table studies report gains against the *empirical* MLE
mean squared error of the same replications (what a simulation table shows),
while the gain-curve study divides by the exact MLE MSE theta/|W| on both the
theoretical and empirical side so the two paths are directly comparable.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from io import StringIO

import numpy as np

from .estimators import pr_gain
from .gain import (
    DegenerateDenominatorError,
    InvalidIntervalError,
    expected_gain,
)
from .moments import RunningMoments
from .phi import ExponentialPhi
from .pointprocess import BallWindow, SteinParams
from .optimize import optimize_at_theta, optimize_datadriven, optimize_gamma_kappa

__all__ = [
    "ExperimentConfig",
    "ReplicationSummary",
    "FIG_ANCHORS",
    "TABLE1_COLUMNS",
    "GAIN_CURVE_COLUMNS",
    "TABLE2_COLUMNS",
    "PR_COLUMNS",
    "substream",
    "table1_study",
    "gain_curve_study",
    "table2_study",
    "pr_study",
    "write_csv",
    "rows_to_csv",
]

TABLE1_COLUMNS = (
    "theta", "d", "k_star", "gamma_star", "kappa_star",
    "mle_mean", "mle_sd", "mle_mse",
    "stein_mean", "stein_sd", "stein_mse", "gain_pct",
)
GAIN_CURVE_COLUMNS = (
    "theta", "k", "kappa", "gamma", "gain_theo", "gain_theo_se", "gain_emp", "gain_emp_se",
)
TABLE2_COLUMNS = ("theta", "d", "rho", "gain_pct", "n_reps", "n_fallback")
PR_COLUMNS = ("theta", "kappa_star", "gain_pct")

# fixed (k, anchor theta) pairs for the gain-vs-theta curves
FIG_ANCHORS = {10: 5.0, 20: 10.0, 50: 25.0, 80: 40.0}

# purpose codes for substream keys
_OPT, _REPS, _CURVE_PARAMS, _CURVE_THEO, _CURVE_EMP = 1, 2, 3, 4, 5
_T2_SELECT, _T2_OPT, _T2_EVAL, _PR_OPT, _PR_EMP = 6, 7, 8, 9, 10


def substream(seed: int, *key: int) -> np.random.Generator:
    """Deterministic child generator for a (study, cell, task) key."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs shared by all studies; the defaults regenerate the full tables."""

    thetas: tuple = (5.0, 10.0, 20.0, 40.0)
    dimensions: tuple = (1, 2, 3)
    replications: int = 50_000
    samples: int = 50_000            # SAA draws per expectation in searches
    confirm_samples: int = 500_000   # draws for final objectives / theoretical curves
    rhos: tuple = (0.0, 1.0, 1.6449, 1.96)
    table2_replications: int = 5_000
    table2_samples: int = 5_000      # per-replication optimiser budget
    table2_evaluation: str = "independent"  # or "matched", see table2_study
    curve_thetas: tuple = tuple(np.arange(2.5, 50.0 + 1e-9, 2.5))
    curve_dimension: int = 2
    kappa_grid: tuple | None = None
    seed: int = 20231115
    threads: int = 1
    batch: int = 8192

    def __post_init__(self):
        if self.replications < 2 or self.table2_replications < 2:
            raise ValueError("replication counts must be >= 2")
        if any(not t > 0 for t in self.thetas) or any(not t > 0 for t in self.curve_thetas):
            raise ValueError("all intensities must be > 0")
        if any(d < 1 for d in self.dimensions):
            raise ValueError("dimensions must be >= 1")
        if any(r < 0 for r in self.rhos):
            raise ValueError("rho values must be >= 0")
        if self.table2_evaluation not in ("independent", "matched"):
            raise ValueError(f"unknown table2_evaluation {self.table2_evaluation!r}")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")

    @property
    def worker_count(self) -> int:
        import os

        return os.cpu_count() or 1 if self.threads == 0 else max(1, self.threads)


@dataclass(frozen=True)
class ReplicationSummary:
    """Per-estimator summary of one simulation cell.

    ``mse`` is the direct mean of (estimate - theta)^2; with the population
    (m-denominator) standard deviation this satisfies
    mse = sd^2 + (mean - theta)^2 exactly.
    """

    estimator: str
    theta: float
    d: int
    mean: float
    sd: float
    mse: float
    n_reps: int

    @classmethod
    def from_moments(cls, estimator, theta, d, values: RunningMoments, sqerr: RunningMoments):
        return cls(
            estimator=estimator,
            theta=theta,
            d=d,
            mean=values.mean,
            sd=math.sqrt(values.variance_population),
            mse=sqerr.mean,
            n_reps=values.count,
        )


def _map_ordered(task, items, threads):
    """Map preserving order; thread pool only when it can actually help."""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(task, items))
    return [task(item) for item in items]


def _batch_sizes(total, batch):
    sizes = [batch] * (total // batch)
    if total % batch:
        sizes.append(total % batch)
    return sizes


def _kth_smallest_uniform(rng, counts, k):
    """k-th smallest of counts[i] uniforms per row; inf where counts[i] < k."""
    m = counts.shape[0]
    cmax = int(counts.max()) if m else 0
    if cmax == 0 or k > cmax:
        return np.full(m, np.inf)
    u = rng.random((m, cmax))
    u[np.arange(cmax)[None, :] >= counts[:, None]] = np.inf
    return np.partition(u, k - 1, axis=1)[:, k - 1]


@dataclass
class _CellMoments:
    mle: RunningMoments = field(default_factory=RunningMoments)
    stein: RunningMoments = field(default_factory=RunningMoments)
    mle_sqerr: RunningMoments = field(default_factory=RunningMoments)
    stein_sqerr: RunningMoments = field(default_factory=RunningMoments)
    diff: RunningMoments = field(default_factory=RunningMoments)

    def merge(self, other: "_CellMoments"):
        self.mle.merge(other.mle)
        self.stein.merge(other.stein)
        self.mle_sqerr.merge(other.mle_sqerr)
        self.stein_sqerr.merge(other.stein_sqerr)
        self.diff.merge(other.diff)
        return self


def _replicate_cell(theta, window, params: SteinParams, m, seed, key, batch, threads):
    """Fresh replications of pattern -> (mle, stein) under exponential shaping.

    Only the count and the k-th smallest squared norm enter either estimator,
    so the engine samples exactly those (same radial construction as
    ``sample_pattern``, directions skipped).
    """
    d, vol = window.dimension, window.volume
    mu = theta * vol
    family = ExponentialPhi(params.gamma, params.kappa)
    prefactor = 4.0 / (d * vol)

    def run_batch(item) -> _CellMoments:
        idx, size = item
        rng = substream(seed, *key, idx)
        counts = rng.poisson(mu, size)
        uk = _kth_smallest_uniform(rng, counts, params.k)
        fired = counts >= params.k
        y = np.where(fired, np.where(np.isfinite(uk), uk, 1.0) ** (2.0 / d), 1.0)
        est_mle = counts / vol
        phi, d1, _ = family.eval(y)
        est_stein = est_mle - prefactor * y * d1 / phi
        out = _CellMoments()
        out.mle.merge(RunningMoments.from_array(est_mle))
        out.stein.merge(RunningMoments.from_array(est_stein))
        e_m = (est_mle - theta) ** 2
        e_s = (est_stein - theta) ** 2
        out.mle_sqerr.merge(RunningMoments.from_array(e_m))
        out.stein_sqerr.merge(RunningMoments.from_array(e_s))
        out.diff.merge(RunningMoments.from_array(e_m - e_s))
        return out

    items = list(enumerate(_batch_sizes(m, batch)))
    results = _map_ordered(run_batch, items, threads)
    total = _CellMoments()
    for r in results:
        total.merge(r)
    return total


def table1_study(config: ExperimentConfig) -> list[dict]:
    """Optimise at known theta per cell, then summarise fresh replications.

    One row per (theta, d): optimiser output, MLE and shrinkage summaries and
    the empirical gain percentage.  A cell whose optimisation degenerates is
    recorded with NaN values rather than aborting the study.
    """
    rows = []
    cells = [(t, d) for t in config.thetas for d in config.dimensions]
    for ci, (theta, d) in enumerate(cells):
        window = BallWindow(d)
        row = {"theta": theta, "d": d}
        try:
            opt = optimize_at_theta(
                theta,
                window,
                n_samples=config.samples,
                kappa_grid=config.kappa_grid,
                rng=substream(config.seed, _OPT, ci),
                n_confirm=config.confirm_samples,
                threads=config.worker_count,
            )
        except DegenerateDenominatorError:
            row.update({c: math.nan for c in TABLE1_COLUMNS if c not in row})
            rows.append(row)
            continue
        params = opt.params
        cell = _replicate_cell(
            theta,
            window,
            params,
            config.replications,
            config.seed,
            (_REPS, ci),
            config.batch,
            config.worker_count,
        )
        s_mle = ReplicationSummary.from_moments("mle", theta, d, cell.mle, cell.mle_sqerr)
        s_stn = ReplicationSummary.from_moments("stein", theta, d, cell.stein, cell.stein_sqerr)
        row.update(
            k_star=params.k,
            gamma_star=params.gamma,
            kappa_star=params.kappa,
            mle_mean=s_mle.mean,
            mle_sd=s_mle.sd,
            mle_mse=s_mle.mse,
            stein_mean=s_stn.mean,
            stein_sd=s_stn.sd,
            stein_mse=s_stn.mse,
            gain_pct=100.0 * (s_mle.mse - s_stn.mse) / s_mle.mse,
        )
        rows.append(row)
    return rows


def gain_curve_study(config: ExperimentConfig, k_list=None, param_rule="anchor") -> list[dict]:
    """Theoretical and empirical gain along a theta grid, per fixed k.

    ``param_rule="anchor"`` fixes (gamma, kappa) per k by optimising at that
    k's anchor theta (the (10, 5), (20, 10), (50, 25), (80, 40) pairing by
    default; pass a {k: theta} mapping to override).  ``param_rule="per-theta"``
    re-optimises (gamma, kappa) at every grid theta.  Both gains are relative
    to the exact MLE MSE theta/|W|.
    """
    anchors = dict(FIG_ANCHORS)
    if isinstance(param_rule, dict):
        anchors = {int(k): float(v) for k, v in param_rule.items()}
        param_rule = "anchor"
    if param_rule not in ("anchor", "per-theta"):
        raise ValueError(f"unknown param_rule {param_rule!r}")
    if k_list is None:
        k_list = tuple(sorted(anchors)) if param_rule == "anchor" else (10, 20, 50, 80)
    d = config.curve_dimension
    window = BallWindow(d)
    rows = []
    for ki, k in enumerate(k_list):
        anchor_params = None
        if param_rule == "anchor":
            if k not in anchors:
                raise ValueError(f"no anchor theta for k={k}")
            anchor_params = optimize_gamma_kappa(
                k,
                anchors[k],
                window,
                n_samples=config.samples,
                kappa_grid=config.kappa_grid,
                rng=substream(config.seed, _CURVE_PARAMS, ki),
                n_confirm=config.confirm_samples,
            ).params
        for ti, theta in enumerate(config.curve_thetas):
            if param_rule == "anchor":
                params = anchor_params
            else:
                params = optimize_gamma_kappa(
                    k,
                    theta,
                    window,
                    n_samples=config.samples,
                    kappa_grid=config.kappa_grid,
                    rng=substream(config.seed, _CURVE_PARAMS, ki, ti),
                    n_confirm=config.confirm_samples,
                ).params
            family = ExponentialPhi(params.gamma, params.kappa)
            theo = expected_gain(
                k,
                family,
                theta,
                window,
                config.confirm_samples,
                substream(config.seed, _CURVE_THEO, ki, ti),
            )
            cell = _replicate_cell(
                theta,
                window,
                params,
                config.replications,
                config.seed,
                (_CURVE_EMP, ki, ti),
                config.batch,
                config.worker_count,
            )
            mse_mle_exact = theta / window.volume
            rows.append(
                {
                    "theta": theta,
                    "k": k,
                    "kappa": params.kappa,
                    "gamma": params.gamma,
                    "gain_theo": theo.value,
                    "gain_theo_se": theo.std_error,
                    "gain_emp": cell.diff.mean / mse_mle_exact,
                    "gain_emp_se": cell.diff.std_error / mse_mle_exact,
                }
            )
    return rows


def _sorted_uniforms(rng, counts):
    """Row-sorted uniforms, one row per replication, inf-padded."""
    m = counts.shape[0]
    cmax = max(int(counts.max()), 1)
    u = rng.random((m, cmax))
    u[np.arange(cmax)[None, :] >= counts[:, None]] = np.inf
    u.sort(axis=1)
    return u


def table2_study(config: ExperimentConfig) -> list[dict]:
    """Data-driven selection: per replication, optimise at the replication's
    MLE over the rho-interval objective and apply the selected estimator.

    Selection is a function of the replication's count alone (the MLE is),
    so optimisations are shared across replications with equal counts, each
    keyed by (cell, rho, count) so results do not depend on scheduling.

    ``table2_evaluation="independent"`` (default) applies the selected
    parameters to an independent replication pattern, measuring the quality
    of the selection rule.  ``"matched"`` applies them to the very pattern
    that produced the MLE; because the selected k essentially always exceeds
    that pattern's own count, the correction then vanishes almost surely and
    the gain collapses to about zero; kept for reference.
    """
    rows = []
    cells = [(t, d) for t in config.thetas for d in config.dimensions]
    m = config.table2_replications
    for ci, (theta, d) in enumerate(cells):
        window = BallWindow(d)
        vol = window.volume
        sel_rng = substream(config.seed, _T2_SELECT, ci)
        counts_sel = sel_rng.poisson(theta * vol, m)
        if config.table2_evaluation == "matched":
            counts_eval = counts_sel
            sorted_u = _sorted_uniforms(sel_rng, counts_eval)
        else:
            eval_rng = substream(config.seed, _T2_EVAL, ci)
            counts_eval = eval_rng.poisson(theta * vol, m)
            sorted_u = _sorted_uniforms(eval_rng, counts_eval)
        est_mle = counts_eval / vol
        mse_mle = float(np.mean((est_mle - theta) ** 2))
        distinct = sorted(int(n) for n in np.unique(counts_sel))
        for ri, rho in enumerate(config.rhos):
            def optimise(n):
                if n == 0:
                    return n, None
                try:
                    res = optimize_datadriven(
                        n / vol,
                        rho,
                        window,
                        n_samples=config.table2_samples,
                        kappa_grid=config.kappa_grid,
                        rng=substream(config.seed, _T2_OPT, ci, ri, n),
                        n_confirm=None,
                    )
                except (DegenerateDenominatorError, InvalidIntervalError):
                    return n, None
                return n, res.params

            selected = dict(_map_ordered(optimise, distinct, config.worker_count))
            ks = np.array([selected[n].k if selected[n] else 0 for n in counts_sel])
            gammas = np.array([selected[n].gamma if selected[n] else 0.0 for n in counts_sel])
            kappas = np.array([selected[n].kappa if selected[n] else 2.0 for n in counts_sel])
            fallback = ks == 0
            col = np.clip(ks - 1, 0, sorted_u.shape[1] - 1)
            uk = sorted_u[np.arange(m), col]
            fired = (~fallback) & (counts_eval >= ks) & np.isfinite(uk)
            y = np.where(fired, uk ** (2.0 / d), 1.0)
            om = 1.0 - y
            corr = 4.0 / (d * vol) * gammas * kappas * y * om ** (kappas - 1.0)
            est = est_mle + np.where(fallback, 0.0, corr)
            mse_stein = float(np.mean((est - theta) ** 2))
            rows.append(
                {
                    "theta": theta,
                    "d": d,
                    "rho": rho,
                    "gain_pct": 100.0 * (mse_mle - mse_stein) / mse_mle,
                    "n_reps": m,
                    "n_fallback": int(fallback.sum()),
                }
            )
    return rows


def _pr_kappa_objective(x, theta, kappa):
    term = np.where(x <= 2.0, x / (2.0 * (1.0 + kappa) - np.minimum(x, 2.0)), 0.0)
    return 2.0 / theta * float(term.mean()) - 2.0 / (theta * kappa * kappa) * math.exp(
        -2.0 * theta
    )


def pr_study(config: ExperimentConfig, kappa_bounds=(0.05, 20.0)) -> list[dict]:
    """Optimise the first-point comparator's kappa per theta, report its gain.

    kappa is tuned on the closed-form gain expression over common
    Exponential(theta) draws (log-scale grid plus golden-section); the
    reported gain is the empirical one at that kappa.
    """
    rows = []
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    for ti, theta in enumerate(config.thetas):
        rng = substream(config.seed, _PR_OPT, ti)
        x = rng.exponential(1.0 / theta, config.confirm_samples)
        grid = np.geomspace(kappa_bounds[0], kappa_bounds[1], 61)
        vals = [_pr_kappa_objective(x, theta, k) for k in grid]
        i = int(np.argmax(vals))
        lo = math.log(grid[max(i - 1, 0)])
        hi = math.log(grid[min(i + 1, len(grid) - 1)])
        f = lambda logk: _pr_kappa_objective(x, theta, math.exp(logk))
        c = hi - invphi * (hi - lo)
        dd = lo + invphi * (hi - lo)
        fc, fd = f(c), f(dd)
        while hi - lo > 1e-4:
            if fc > fd:
                hi, dd, fd = dd, c, fc
                c = hi - invphi * (hi - lo)
                fc = f(c)
            else:
                lo, c, fc = c, dd, fd
                dd = lo + invphi * (hi - lo)
                fd = f(dd)
        kappa_star = math.exp(0.5 * (lo + hi))
        emp = pr_gain(
            theta,
            kappa_star,
            config.replications,
            substream(config.seed, _PR_EMP, ti),
            method="empirical",
        )
        rows.append({"theta": theta, "kappa_star": kappa_star, "gain_pct": 100.0 * emp.value})
    return rows


def _render(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float) and value.is_integer() and abs(value) < 1e15:
        return format(value, ".17g")
    return format(float(value), ".17g")


def rows_to_csv(rows: list[dict], columns: tuple[str, ...]) -> str:
    """Render rows as CSV text with 17-significant-digit floats."""
    buf = StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_render(row[c]) for c in columns) + "\n")
    return buf.getvalue()


def write_csv(rows: list[dict], columns: tuple[str, ...], path) -> None:
    text = rows_to_csv(rows, columns)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
