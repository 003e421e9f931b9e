"""Monte Carlo harness comparing empirical and GP tail-extrapolated quantiles.

For a chosen study distribution: repeatedly draw samples of size n, evaluate
both estimators over a grid of extreme quantile levels, and aggregate the
across-replicate mean and 2.5%/97.5% envelope, plus the expected sample
maximum as a saturation reference.

Replicates are independent work units on Philox substreams keyed by
(seed, replicate index), so results are identical whether replicates run
serially or on a thread pool.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import estimators
from .estimators import (
    ConvergenceError,
    DegenerateSampleError,
    InsufficientDataError,
    sorted_empirical_quantiles,
)
from .rng import AUX_STREAM_BASE, substream

DEFAULT_SEED = 20240831
DEFAULT_EMAX_REPS = 100_000


class AggregationError(RuntimeError):
    """Raised when no successful GP replicates remain at some tau."""


def default_tau_grid(tau_min=0.99, tau_max=0.99999, points=50):
    """Quantile levels equally spaced in log10(1 - tau)."""
    if not (0.0 < tau_min < tau_max < 1.0):
        raise ValueError(f"need 0 < tau_min < tau_max < 1, got {tau_min}, {tau_max}")
    if points < 2:
        raise ValueError(f"grid needs at least 2 points, got {points}")
    exps = np.linspace(math.log10(1.0 - tau_min), math.log10(1.0 - tau_max), points)
    return 1.0 - 10.0**exps


@dataclass
class StudyConfig:
    dist: object
    n: int = 1000
    reps: int = 10_000
    tau_grid: np.ndarray = field(default_factory=default_tau_grid)
    threshold_level: float = 0.95
    seed: int = DEFAULT_SEED
    e_max_reps: int = DEFAULT_EMAX_REPS

    def __post_init__(self):
        self.tau_grid = np.asarray(self.tau_grid, dtype=np.float64)
        if self.n < 100:
            raise ValueError(f"sample size must be >= 100, got {self.n}")
        if self.reps < 2:
            raise ValueError(f"replicate count must be >= 2, got {self.reps}")
        if not 0.0 < self.threshold_level < 1.0:
            raise ValueError(
                f"threshold level must be in (0, 1), got {self.threshold_level}"
            )
        if self.tau_grid.size == 0 or np.any(np.diff(self.tau_grid) <= 0.0):
            raise ValueError("tau grid must be strictly increasing")
        if self.tau_grid[0] < self.threshold_level or self.tau_grid[-1] >= 1.0:
            raise ValueError(
                "tau grid must lie in [threshold_level, 1); got "
                f"[{self.tau_grid[0]}, {self.tau_grid[-1]}]"
            )
        if self.e_max_reps < 1000:
            raise ValueError(f"e_max_reps must be >= 1000, got {self.e_max_reps}")


@dataclass
class SimSummary:
    tau_grid: np.ndarray
    true_q: np.ndarray
    emp_mean: np.ndarray
    emp_lo: np.ndarray
    emp_hi: np.ndarray
    gp_mean: np.ndarray
    gp_lo: np.ndarray
    gp_hi: np.ndarray
    e_max: float
    e_max_se: float
    reps: int
    gp_fail_count: int
    boundary_count: int
    mean_sample_max: float


def run_replicate(cfg: StudyConfig, rep_index: int):
    """One replicate: sample, both estimators over the grid.

    Returns (emp_estimates, gp_estimates_or_None, boundary_flag, sample_max).
    GP fit failures are reported as gp=None, never raised.
    """
    if rep_index >= cfg.reps:
        raise ValueError(f"replicate index {rep_index} >= reps {cfg.reps}")
    rng = substream(cfg.seed, rep_index)
    sample = np.sort(cfg.dist.sample(cfg.n, rng))
    emp = sorted_empirical_quantiles(sample, cfg.tau_grid)
    s_max = float(sample[-1])
    try:
        tail = estimators.fit_tail(sample, cfg.threshold_level)
    except (InsufficientDataError, DegenerateSampleError, ConvergenceError):
        return emp, None, False, s_max
    gp = np.array([estimators.gp_quantile(tail, t) for t in cfg.tau_grid])
    return emp, gp, tail.boundary, s_max


def estimate_expected_max(dist, n, mc_reps, rng, batch=2000):
    """Monte Carlo estimate of E[max of n i.i.d. draws] with standard error."""
    if mc_reps < 1000:
        raise ValueError(f"mc_reps must be >= 1000, got {mc_reps}")
    maxima = np.empty(mc_reps)
    done = 0
    while done < mc_reps:
        b = min(batch, mc_reps - done)
        draws = dist.sample(b * n, rng).reshape(b, n)
        maxima[done : done + b] = draws.max(axis=1)
        done += b
    se = float(np.std(maxima, ddof=1) / math.sqrt(mc_reps))
    return float(np.mean(maxima)), se


def _envelope(column):
    """Across-replicate mean and 2.5%/97.5% order-statistic envelope."""
    srt = np.sort(column)
    lo = sorted_empirical_quantiles(srt, [0.025])[0]
    hi = sorted_empirical_quantiles(srt, [0.975])[0]
    return float(np.mean(column)), float(lo), float(hi)


def aggregate(cfg: StudyConfig, results, e_max, e_max_se) -> SimSummary:
    """Combine per-replicate estimates; order-insensitive given rep indexing."""
    taus = cfg.tau_grid
    emp = np.vstack([r[0] for r in results])
    gp_rows = [r[1] for r in results if r[1] is not None]
    gp_fail = len(results) - len(gp_rows)
    boundary = sum(1 for r in results if r[2])
    if len(gp_rows) < 2:
        raise AggregationError(
            f"fewer than 2 successful GP replicates at tau={taus[0]:.6g} "
            f"({gp_fail} of {len(results)} failed)"
        )
    gp = np.vstack(gp_rows)

    emp_mean = np.empty(taus.size)
    emp_lo = np.empty(taus.size)
    emp_hi = np.empty(taus.size)
    gp_mean = np.empty(taus.size)
    gp_lo = np.empty(taus.size)
    gp_hi = np.empty(taus.size)
    for j in range(taus.size):
        emp_mean[j], emp_lo[j], emp_hi[j] = _envelope(emp[:, j])
        gp_mean[j], gp_lo[j], gp_hi[j] = _envelope(gp[:, j])

    # the empirical estimator's plateau beyond tau = 1 - 1/n
    mean_max = float(np.mean([r[3] for r in results]))

    true_q = np.array([cfg.dist.quantile(t) for t in taus])
    return SimSummary(
        tau_grid=taus,
        true_q=true_q,
        emp_mean=emp_mean,
        emp_lo=emp_lo,
        emp_hi=emp_hi,
        gp_mean=gp_mean,
        gp_lo=gp_lo,
        gp_hi=gp_hi,
        e_max=e_max,
        e_max_se=e_max_se,
        reps=len(results),
        gp_fail_count=gp_fail,
        boundary_count=boundary,
        mean_sample_max=mean_max,
    )


def run_study(cfg: StudyConfig, threads: int = 1) -> SimSummary:
    """Full study: all replicates (optionally on a thread pool) + aggregation."""
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    if threads == 1:
        results = [run_replicate(cfg, i) for i in range(cfg.reps)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: run_replicate(cfg, i), range(cfg.reps)))
    e_max, e_max_se = estimate_expected_max(
        cfg.dist, cfg.n, cfg.e_max_reps, substream(cfg.seed, AUX_STREAM_BASE)
    )
    return aggregate(cfg, results, e_max, e_max_se)
