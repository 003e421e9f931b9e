"""The two competing extreme-quantile estimators.

Empirical (order-statistic) quantiles with the left-continuous inf
convention, and the peaks-over-threshold route: maximum-likelihood GP fit to
threshold excesses followed by tail extrapolation.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .distributions import GpParams, XI_EPS

XI_FLOOR = -0.5
# fits this close to the shape constraint are reported as boundary fits
XI_BOUNDARY_TOL = 1e-3
MIN_EXCEEDANCES = 10


class InsufficientDataError(ValueError):
    """Too few observations (or exceedances) for the requested fit."""


class DegenerateSampleError(ValueError):
    """Zero-variance input; the GP likelihood has no interior maximiser."""


class ConvergenceError(RuntimeError):
    """Optimizer did not converge; carries the best iterate found."""

    def __init__(self, message, best: "GpFit"):
        super().__init__(message)
        self.best = best


def _as_sample(values):
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 1:
        a = a.ravel()
    if a.size == 0:
        raise InsufficientDataError("empty sample")
    if not np.all(np.isfinite(a)):
        raise ValueError("sample contains non-finite values")
    return a


def quantile_index(n, tau):
    """1-based order-statistic index: smallest k with k/n >= tau.

    Computed with the same floating-point comparison a literal scan of the
    empirical CDF would use, so ceil rounding noise cannot shift the index.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {tau}")
    k = math.ceil(n * tau)
    k = min(max(k, 1), n)
    while k > 1 and (k - 1) / n >= tau:
        k -= 1
    while k < n and k / n < tau:
        k += 1
    return k


def empirical_quantile(values, tau):
    """Left-continuous empirical quantile: the ceil(n*tau)-th order statistic.

    For tau > 1 - 1/n this is the sample maximum.
    """
    a = _as_sample(values)
    k = quantile_index(a.size, tau)
    return float(np.partition(a, k - 1)[k - 1])


def sorted_empirical_quantiles(sorted_values, taus):
    """Vectorised empirical quantiles from an already-sorted array."""
    a = np.asarray(sorted_values, dtype=np.float64)
    n = a.size
    idx = [quantile_index(n, t) - 1 for t in np.atleast_1d(taus)]
    return a[idx]


@dataclass(frozen=True)
class GpFit:
    """Result of a GP maximum-likelihood fit."""

    params: GpParams
    log_lik: float
    iterations: int
    converged: bool
    boundary: bool

    @property
    def sigma(self):
        return self.params.sigma

    @property
    def xi(self):
        return self.params.xi


def gp_negloglik(excesses, sigma, xi):
    """GP negative log-likelihood of positive excesses (thin kernel wrapper)."""
    z = np.ascontiguousarray(excesses, dtype=np.float64)
    return float(_kernels.gp_negloglik(z, float(sigma), float(xi)))


def fit_gp_mle(excesses, max_iter=500, tol=1e-8) -> GpFit:
    """Maximum-likelihood GP fit to positive excesses.

    Simplex search over (log sigma, xi) from the moment start
    (log mean-excess, 0.1), with xi constrained above -0.5. Raises
    ConvergenceError (carrying the best iterate) if the simplex has not
    collapsed below tol within max_iter iterations per stage.
    """
    z = _as_sample(excesses)
    if z.size < MIN_EXCEEDANCES:
        raise InsufficientDataError(
            f"need at least {MIN_EXCEEDANCES} exceedances, got {z.size}"
        )
    if np.any(z <= 0.0):
        raise ValueError("excesses must be strictly positive")
    if np.min(z) == np.max(z):
        raise DegenerateSampleError("all excesses are equal; GP fit is degenerate")

    z = np.ascontiguousarray(z)
    sigma, xi, nll, iters, converged = _kernels.gp_fit(z, int(max_iter), float(tol))
    fit = GpFit(
        params=GpParams(float(sigma), float(xi)),
        log_lik=-float(nll),
        iterations=int(iters),
        converged=bool(converged),
        boundary=bool(xi <= XI_FLOOR + XI_BOUNDARY_TOL),
    )
    if not fit.converged:
        raise ConvergenceError(
            f"GP simplex search did not converge within {max_iter} iterations",
            best=fit,
        )
    return fit


@dataclass(frozen=True)
class TailModel:
    """Fitted peaks-over-threshold tail: threshold, exceedance fraction, GP."""

    u: float
    zeta_u: float
    gp: GpParams
    n_exc: int
    n: int
    log_lik: float
    boundary: bool

    def quantile(self, tau):
        return gp_quantile(self, tau)


def fit_tail(values, threshold_level=0.95, max_iter=500, tol=1e-8) -> TailModel:
    """Fit a GP to strict excesses above the empirical threshold quantile."""
    a = _as_sample(values)
    if not 0.0 < threshold_level < 1.0:
        raise ValueError(
            f"threshold level must be in (0, 1), got {threshold_level}"
        )
    u = empirical_quantile(a, threshold_level)
    excesses = a[a > u] - u
    if excesses.size < MIN_EXCEEDANCES:
        raise InsufficientDataError(
            f"only {excesses.size} exceedances above threshold "
            f"{u:.6g} (level {threshold_level}); need {MIN_EXCEEDANCES}"
        )
    fit = fit_gp_mle(excesses, max_iter=max_iter, tol=tol)
    return TailModel(
        u=float(u),
        zeta_u=excesses.size / a.size,
        gp=fit.params,
        n_exc=int(excesses.size),
        n=int(a.size),
        log_lik=fit.log_lik,
        boundary=fit.boundary,
    )


def gp_quantile(tail: TailModel, tau):
    """Tail-extrapolated quantile u + (sigma/xi)*(((1-tau)/zeta_u)^-xi - 1).

    Only valid in the extrapolation region tau >= 1 - zeta_u; equals u
    exactly on its boundary.
    """
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {tau}")
    if tau < 1.0 - tail.zeta_u:
        raise ValueError(
            f"tau={tau} is below the extrapolation region "
            f"(needs tau >= {1.0 - tail.zeta_u}); use the empirical quantile"
        )
    if tau == 1.0 - tail.zeta_u:
        # boundary of the extrapolation region: the threshold itself
        return tail.u
    ratio = (1.0 - tau) / tail.zeta_u
    sigma, xi = tail.gp.sigma, tail.gp.xi
    if abs(xi) < XI_EPS:
        return tail.u - sigma * math.log(ratio)
    return tail.u + sigma / xi * (ratio ** (-xi) - 1.0)
