"""Pinball-loss quantile regression.

The check loss rho_tau(u) = u*(tau - 1{u<0}), plus three quantile-function
families fitted by empirical risk minimisation: a constant (which is exactly
the empirical quantile), a linear model, and a small tanh MLP trained by
hand-rolled backpropagation with Adam.

Models are fitted independently per tau; fitted curves may cross across tau
levels, which is reported (crossing_fraction) rather than prevented.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .estimators import ConvergenceError, empirical_quantile
from .rng import substream


def pinball_loss(u, tau):
    """Check loss rho_tau(u) = u*(tau - 1{u < 0}); u = 0 counts as >= 0."""
    u = float(u)
    if not math.isfinite(u):
        raise ValueError(f"residual must be finite, got {u}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {tau}")
    return u * (tau - (1.0 if u < 0.0 else 0.0))


def pinball_risk(residuals, tau):
    """Mean check loss over a residual vector."""
    r = np.asarray(residuals, dtype=np.float64)
    return float(np.mean(r * (tau - (r < 0.0))))


@dataclass
class RegressionData:
    """Covariate matrix (n, q) paired with n responses."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        if self.x.shape[0] == 1 and self.x.shape[1] > 1:
            # a single 1-d covariate passed as a flat vector
            self.x = self.x.T
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.x.shape[0] != self.y.size:
            raise ValueError(
                f"covariate rows ({self.x.shape[0]}) != responses ({self.y.size})"
            )
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("regression data must be finite")

    @property
    def n(self):
        return self.y.size

    @property
    def q(self):
        return self.x.shape[1]


@dataclass
class TrainConfig:
    seed: int = 0
    hidden: tuple = (32, 32)
    epochs: int = 2000
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    # smoothing width for the linear fit, as a fraction of sd(y)
    smoothing: float = 1e-4
    max_iter: int = 500


@dataclass
class ConstantModel:
    tau: float
    beta: float
    train_loss: float = float("nan")

    def predict(self, x=None):
        if x is None:
            return self.beta
        x = np.asarray(x, dtype=np.float64)
        if x.ndim <= 1:
            return self.beta
        return np.full(x.shape[0], self.beta)


@dataclass
class LinearModel:
    tau: float
    weights: np.ndarray
    intercept: float
    train_loss: float = float("nan")
    degenerate_columns: tuple = ()

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            if x.size != self.weights.size:
                raise ValueError(
                    f"expected {self.weights.size} covariates, got {x.size}"
                )
            return float(x @ self.weights + self.intercept)
        if x.shape[1] != self.weights.size:
            raise ValueError(
                f"expected {self.weights.size} covariates, got {x.shape[1]}"
            )
        return x @ self.weights + self.intercept


@dataclass
class MlpModel:
    tau: float
    weights: list
    biases: list
    x_mean: np.ndarray
    x_std: np.ndarray
    activation: str = "tanh"
    train_loss: float = float("nan")
    degenerate_columns: tuple = ()

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def predict(self, x):
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        x2 = np.atleast_2d(x)
        if x2.shape[1] != self.weights[0].shape[0]:
            raise ValueError(
                f"expected {self.weights[0].shape[0]} covariates, got {x2.shape[1]}"
            )
        xs = (x2 - self.x_mean) / self.x_std
        out = mlp_forward(self.weights, self.biases, xs)
        return float(out[0]) if single else out


def mlp_forward(weights, biases, xs):
    """Forward pass: tanh hidden layers, linear scalar output."""
    a = xs
    for w, b in zip(weights[:-1], biases[:-1]):
        a = np.tanh(a @ w + b)
    return (a @ weights[-1] + biases[-1]).ravel()


def mlp_risk_and_grads(weights, biases, xs, y, tau):
    """Empirical pinball risk and its backpropagated (sub)gradients.

    At zero residuals the indicator 1{u<0} is taken as 0, matching
    pinball_loss.
    """
    n = y.size
    acts = [xs]
    a = xs
    for w, b in zip(weights[:-1], biases[:-1]):
        a = np.tanh(a @ w + b)
        acts.append(a)
    out = (a @ weights[-1] + biases[-1]).ravel()
    res = y - out
    risk = pinball_risk(res, tau)

    # d risk / d out = -(tau - 1{res<0}) / n
    delta = (-(tau - (res < 0.0)) / n)[:, None]
    g_w = [None] * len(weights)
    g_b = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        g_w[layer] = acts[layer].T @ delta
        g_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (1.0 - acts[layer] ** 2)
    return risk, g_w, g_b


def _check_degenerate(x):
    spread = np.ptp(x, axis=0)
    cols = tuple(int(j) for j in np.nonzero(spread == 0.0)[0])
    if cols:
        warnings.warn(
            f"covariate column(s) {cols} have zero variance", stacklevel=3
        )
    return cols


def _line_min_exact(r, s, tau):
    """Exact minimiser of sum rho_tau(r - delta*s) over delta.

    The objective is convex piecewise-linear with breakpoints r_i/s_i; the
    left-continuous minimiser is the smallest breakpoint where the right
    derivative becomes non-negative.
    """
    mask = s != 0.0
    if not np.any(mask):
        return 0.0
    bp = np.unique(r[mask] / s[mask])

    def right_deriv(delta):
        u = r - delta * s
        ind = (u < 0.0) | ((u == 0.0) & (s > 0.0))
        return float(np.sum(-s * (tau - ind)))

    lo, hi = 0, bp.size - 1
    if right_deriv(bp[hi]) < 0.0:
        return float(bp[hi])
    while lo < hi:
        mid = (lo + hi) // 2
        if right_deriv(bp[mid]) >= 0.0:
            hi = mid
        else:
            lo = mid + 1
    return float(bp[lo])


def _polish_coordinates(x1, y, tau, theta):
    """One pass of exact coordinate descent on the unsmoothed pinball risk."""
    theta = theta.copy()
    pred = x1 @ theta
    for j in range(theta.size):
        s = x1[:, j]
        r = y - pred + s * theta[j]
        new = _line_min_exact(r, s, tau)
        pred += s * (new - theta[j])
        theta[j] = new
    return theta


def fit_constant(data_or_y, tau, cfg=None):
    y = data_or_y.y if isinstance(data_or_y, RegressionData) else np.asarray(
        data_or_y, dtype=np.float64
    )
    beta = empirical_quantile(y, tau)
    return ConstantModel(tau=tau, beta=beta, train_loss=pinball_risk(y - beta, tau))


def fit_linear(data: RegressionData, tau, cfg: TrainConfig = None):
    """Linear quantile regression by smoothed-loss descent plus exact polish.

    The check loss is Huberized on [-h, h] (h = smoothing * sd(y)) and
    minimised with L-BFGS from a least-squares start, then one pass of exact
    coordinate descent on the true pinball risk. A constant-start candidate
    is polished the same way, so the returned risk never exceeds the
    constant fit's risk.
    """
    cfg = cfg or TrainConfig()
    if data.n < data.q + 1:
        raise ValueError(f"need n >= q+1 observations, got n={data.n}, q={data.q}")
    degenerate = _check_degenerate(data.x)

    x1 = np.hstack([np.ones((data.n, 1)), data.x])
    y = data.y
    h = cfg.smoothing * float(np.std(y))
    if h == 0.0:
        h = cfg.smoothing

    def smooth_obj(theta):
        u = y - x1 @ theta
        inner = np.abs(u) <= h
        val = np.where(
            inner,
            u * u / (4.0 * h) + (tau - 0.5) * u + h / 4.0,
            u * (tau - (u < 0.0)),
        )
        dpdu = np.where(inner, u / (2.0 * h) + (tau - 0.5), tau - (u < 0.0))
        return float(np.mean(val)), -(x1.T @ dpdu) / data.n

    # least-squares start with the intercept shifted to the residual quantile
    theta0, *_ = np.linalg.lstsq(x1, y, rcond=None)
    theta0[0] += empirical_quantile(y - x1 @ theta0, tau)
    res = minimize(
        smooth_obj,
        theta0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.max_iter, "ftol": 1e-15, "gtol": 1e-10},
    )
    if not np.all(np.isfinite(res.x)):
        raise ConvergenceError("linear quantile fit diverged", best=None)

    candidates = [_polish_coordinates(x1, y, tau, res.x)]
    # constant-optimum start: guarantees risk <= the constant fit's risk
    theta_c = np.zeros(data.q + 1)
    theta_c[0] = empirical_quantile(y, tau)
    candidates.append(_polish_coordinates(x1, y, tau, theta_c))

    risks = [pinball_risk(y - x1 @ t, tau) for t in candidates]
    best = candidates[int(np.argmin(risks))]
    return LinearModel(
        tau=tau,
        weights=best[1:].copy(),
        intercept=float(best[0]),
        train_loss=float(min(risks)),
        degenerate_columns=degenerate,
    )


def _glorot_uniform(rng, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def fit_mlp(data: RegressionData, tau, cfg: TrainConfig = None):
    """Small tanh MLP trained on the exact pinball risk with full-batch Adam.

    Inputs are standardized; hidden weights use Glorot-uniform init; the
    output layer starts at zero weights with the constant-fit quantile as its
    bias, so the initial risk equals the constant optimum and the tracked
    best iterate can only improve on it.
    """
    cfg = cfg or TrainConfig()
    degenerate = _check_degenerate(data.x)

    mu = data.x.mean(axis=0)
    sd = data.x.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    xs = (data.x - mu) / sd
    y = data.y

    rng = substream(cfg.seed)
    sizes = [data.q, *cfg.hidden, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(_glorot_uniform(rng, fan_in, fan_out))
        biases.append(np.zeros(fan_out))
    weights[-1][:] = 0.0
    biases[-1][:] = empirical_quantile(y, tau)

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]

    best_risk = pinball_risk(y - mlp_forward(weights, biases, xs), tau)
    best_w = [w.copy() for w in weights]
    best_b = [b.copy() for b in biases]

    b1, b2, eps, lr = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.learning_rate
    for t in range(1, cfg.epochs + 1):
        _, g_w, g_b = mlp_risk_and_grads(weights, biases, xs, y, tau)
        corr1 = 1.0 - b1**t
        corr2 = 1.0 - b2**t
        for i in range(len(weights)):
            m_w[i] = b1 * m_w[i] + (1.0 - b1) * g_w[i]
            v_w[i] = b2 * v_w[i] + (1.0 - b2) * g_w[i] ** 2
            weights[i] -= lr * (m_w[i] / corr1) / (np.sqrt(v_w[i] / corr2) + eps)
            m_b[i] = b1 * m_b[i] + (1.0 - b1) * g_b[i]
            v_b[i] = b2 * v_b[i] + (1.0 - b2) * g_b[i] ** 2
            biases[i] -= lr * (m_b[i] / corr1) / (np.sqrt(v_b[i] / corr2) + eps)
        risk = pinball_risk(y - mlp_forward(weights, biases, xs), tau)
        if risk < best_risk:
            best_risk = risk
            best_w = [w.copy() for w in weights]
            best_b = [b.copy() for b in biases]

    return MlpModel(
        tau=tau,
        weights=best_w,
        biases=best_b,
        x_mean=mu,
        x_std=sd,
        train_loss=best_risk,
        degenerate_columns=degenerate,
    )


_FITTERS = {"constant": fit_constant, "linear": fit_linear, "mlp": fit_mlp}


def fit_quantile_model(data: RegressionData, tau, form="constant", cfg=None):
    """Fit a quantile function of the given form by pinball risk minimisation."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {tau}")
    try:
        fitter = _FITTERS[form]
    except KeyError:
        raise ValueError(f"unknown model form {form!r}; use constant|linear|mlp")
    return fitter(data, tau, cfg)


def predict(model, x=None):
    """Evaluate a fitted quantile model at a covariate vector."""
    if isinstance(model, ConstantModel):
        return model.predict(x)
    return model.predict(x)


def crossing_fraction(models, x):
    """Fraction of rows of x where predictions are non-monotone in tau."""
    models = sorted(models, key=lambda m: m.tau)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    preds = np.column_stack(
        [np.broadcast_to(m.predict(x), x.shape[0]) for m in models]
    )
    crossed = np.any(np.diff(preds, axis=1) < 0.0, axis=1)
    return float(np.mean(crossed))
