"""Ground-truth distributions for the simulation study.

Four fixed study distributions of increasing tail heaviness (standard normal,
Gamma(shape 4, scale 1/4), standard log-normal, Frechet with shape 3) plus the
generalised Pareto family used for threshold excesses. Each distribution
exposes cdf, quantile (inverse cdf) and sampling; cdf/quantile are scalar and
pure, sampling is vectorised over a caller-owned generator.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincinv, ndtr, ndtri

XI_EPS = 1e-8


def _check_prob(tau):
    t = float(tau)
    if not 0.0 < t < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {tau}")
    return t


def _check_finite(y):
    v = float(y)
    if not math.isfinite(v):
        raise ValueError(f"evaluation point must be finite, got {y}")
    return v


def _check_size(n):
    if int(n) < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    return int(n)


@dataclass(frozen=True)
class GpParams:
    """Scale/shape pair of the generalised Pareto distribution."""

    sigma: float
    xi: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError(f"GP scale must be positive, got {self.sigma}")
        if not math.isfinite(self.xi):
            raise ValueError(f"GP shape must be finite, got {self.xi}")


class Normal01:
    """Standard normal N(0, 1)."""

    name = "normal01"

    def cdf(self, y):
        return float(ndtr(_check_finite(y)))

    def quantile(self, tau):
        return float(ndtri(_check_prob(tau)))

    def sample(self, n, rng):
        return rng.standard_normal(_check_size(n))


class Gamma4:
    """Gamma with shape 4 and scale 1/4 (mean exactly 1)."""

    name = "gamma4"
    shape = 4.0
    scale = 0.25

    def cdf(self, y):
        y = _check_finite(y)
        if y <= 0.0:
            return 0.0
        return float(gammainc(self.shape, y / self.scale))

    def quantile(self, tau):
        return float(self.scale * gammaincinv(self.shape, _check_prob(tau)))

    def sample(self, n, rng):
        return self.scale * rng.standard_gamma(self.shape, _check_size(n))


class LogNormal01:
    """Log-normal with zero log-mean and unit log-variance."""

    name = "lognormal01"

    def cdf(self, y):
        y = _check_finite(y)
        if y <= 0.0:
            return 0.0
        return float(ndtr(math.log(y)))

    def quantile(self, tau):
        return math.exp(float(ndtri(_check_prob(tau))))

    def sample(self, n, rng):
        return np.exp(rng.standard_normal(_check_size(n)))


class Frechet3:
    """Frechet with shape 3 and lower endpoint 0: F(y) = exp(-y^-3)."""

    name = "frechet3"
    alpha = 3.0

    def cdf(self, y):
        y = _check_finite(y)
        if y <= 0.0:
            return 0.0
        return math.exp(-(y ** (-self.alpha)))

    def quantile(self, tau):
        return (-math.log(_check_prob(tau))) ** (-1.0 / self.alpha)

    def sample(self, n, rng):
        u = rng.random(_check_size(n))
        return (-np.log(u)) ** (-1.0 / self.alpha)


class GenPareto:
    """Generalised Pareto GP(sigma, xi) on [0, inf) (xi >= 0) or [0, -sigma/xi].

    Evaluators switch to the exponential limit for |xi| < 1e-8 to avoid
    cancellation in (1 + xi*y/sigma)^(-1/xi).
    """

    def __init__(self, sigma, xi=None):
        if isinstance(sigma, GpParams):
            self.params = sigma
        else:
            self.params = GpParams(float(sigma), float(xi))
        self.name = f"gp(sigma={self.params.sigma:g},xi={self.params.xi:g})"

    @property
    def sigma(self):
        return self.params.sigma

    @property
    def xi(self):
        return self.params.xi

    def upper_endpoint(self):
        if self.xi < 0.0:
            return -self.sigma / self.xi
        return math.inf

    def cdf(self, y):
        y = _check_finite(y)
        if y <= 0.0:
            return 0.0
        if abs(self.xi) < XI_EPS:
            return -math.expm1(-y / self.sigma)
        w = 1.0 + self.xi * y / self.sigma
        if w <= 0.0:
            # above the finite upper endpoint (xi < 0)
            return 1.0
        return -math.expm1(-math.log(w) / self.xi)

    def quantile(self, tau):
        tau = _check_prob(tau)
        if abs(self.xi) < XI_EPS:
            return -self.sigma * math.log1p(-tau)
        return self.sigma / self.xi * math.expm1(-self.xi * math.log1p(-tau))

    def sample(self, n, rng):
        u = rng.random(_check_size(n))
        if abs(self.xi) < XI_EPS:
            return -self.sigma * np.log1p(-u)
        return self.sigma / self.xi * np.expm1(-self.xi * np.log1p(-u))


# the four study cases, keyed by their CLI names
STUDY_DISTRIBUTIONS = {
    "normal01": Normal01(),
    "gamma4": Gamma4(),
    "lognormal01": LogNormal01(),
    "frechet3": Frechet3(),
}


def cdf(dist, y):
    return dist.cdf(y)


def true_quantile(dist, tau):
    return dist.quantile(tau)


def sample(dist, n, rng):
    return dist.sample(n, rng)
