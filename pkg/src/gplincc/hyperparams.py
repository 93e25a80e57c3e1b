"""Empirical-Bayes estimation of the GP hyperparameters.

The marginal likelihood of the data, integrated over the stacked design
values, depends on the data only through the GLS estimates ``t`` and their
block-diagonal covariance ``Delta``. Up to an additive constant that does not
depend on the hyperparameters, minus twice its logarithm is::

    l(phi) = (M - t)^T (Delta + K)^-1 (M - t) - log|Delta| + n m log(2 pi)
             + m log|Sigma_eps| + log|Delta + K|

The trend coefficients ``beta`` enter only through ``M = H beta`` and are
profiled out in closed form; the variances and lengthscales are searched by
multistart Nelder-Mead in log space.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from ._errors import FittingError, InvalidArgumentError, NumericError, RankError
from .design import LambdaDistribution, lhs_uniform
from .kernels import JITTER, _unit_matern52
from .params import HyperParams
from .posterior import constant_trend

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings for the multistart simplex search.

    Bounds are ``(low, high)`` pairs in log space; ``None`` selects the
    data-driven defaults (``1e-4..1e4`` times the spread of the GLS
    estimates for variances, ``0.01..10`` times the design range for
    lengthscales).
    """

    n_starts: int = 10
    log_sigma2_bounds: tuple = None
    log_psi_bounds: tuple = None
    xatol: float = 1e-4
    fatol: float = 1e-8
    max_evals: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.n_starts < 1 or self.max_evals < 1:
            raise InvalidArgumentError("n_starts and max_evals must be positive")
        for b in (self.log_sigma2_bounds, self.log_psi_bounds):
            if b is not None and not b[0] < b[1]:
                raise InvalidArgumentError(f"invalid search bounds {b}")


@dataclass
class HyperFit:
    """Result of ``fit_hyperparameters``.

    ``trace`` has one row per objective evaluation:
    ``start, eval, log_sigma2_1..p, log_psi_1..(p q), nll``.
    """

    hyper: HyperParams
    nll: float
    trace: np.ndarray
    start_nll: np.ndarray
    final_nll: np.ndarray
    bounds: np.ndarray
    trace_columns: list = field(default_factory=list)


class MarginalLikelihood:
    """Negative log marginal likelihood for fixed calibration data.

    Distances and hyperparameter-free constants are precomputed so repeated
    evaluations only rebuild and factor ``Delta + K``.
    """

    def __init__(self, data, trend_basis=None):
        self.data = data
        self.p, self.m = data.p, data.m
        self.q = data.design.shape[1]
        self.t = data.theta_stack
        self.Delta = data.delta_matrix()
        self.H = constant_trend(self.m, self.p) if trend_basis is None else np.asarray(trend_basis, float)
        if self.H.shape[0] != self.p * self.m:
            raise InvalidArgumentError("trend basis has the wrong number of rows")
        self.dist = [np.abs(data.design[:, d, None] - data.design[None, :, d]) for d in range(self.q)]
        logdet_delta = sum(np.linalg.slogdet(b)[1] for b in data.delta)
        self.const = (data.n * self.m * LOG_2PI + self.m * np.sum(np.log(data.noise))
                      - logdet_delta)

    def prior_cov(self, sigma2, psi):
        pm = self.p * self.m
        K = np.zeros((pm, pm))
        for u in range(self.p):
            R = np.ones((self.m, self.m))
            for d in range(self.q):
                R *= _unit_matern52(self.dist[d] / psi[u, d])
            R *= sigma2[u]
            R[np.diag_indices(self.m)] += JITTER * sigma2[u]
            K[u::self.p, u::self.p] = R
        return K

    def _factor(self, sigma2, psi):
        S = self.Delta + self.prior_cov(sigma2, psi)
        try:
            return linalg.cho_factor(S, lower=True)
        except linalg.LinAlgError:
            raise NumericError("Delta + K_phi is not positive definite") from None

    def _beta(self, cf):
        SiH = linalg.cho_solve(cf, self.H)
        A = self.H.T @ SiH
        try:
            return linalg.solve(A, SiH.T @ self.t, assume_a="pos")
        except (linalg.LinAlgError, ValueError):
            raise RankError("H^T (Delta + K)^-1 H is singular") from None

    def _value(self, cf, beta):
        r = self.H @ beta - self.t
        quad = r @ linalg.cho_solve(cf, r)
        logdet = 2.0 * np.sum(np.log(np.diag(cf[0])))
        return float(quad + logdet + self.const)

    def __call__(self, sigma2, psi, beta):
        sigma2, psi = self._unpack(sigma2, psi)
        return self._value(self._factor(sigma2, psi), np.atleast_1d(np.asarray(beta, float)))

    def profile_beta(self, sigma2, psi):
        sigma2, psi = self._unpack(sigma2, psi)
        return self._beta(self._factor(sigma2, psi))

    def profiled(self, sigma2, psi):
        """``(l(sigma2, psi, beta_hat), beta_hat)``."""
        sigma2, psi = self._unpack(sigma2, psi)
        cf = self._factor(sigma2, psi)
        beta = self._beta(cf)
        return self._value(cf, beta), beta

    def _unpack(self, sigma2, psi):
        hp = HyperParams(None, sigma2, psi)
        if hp.q != self.q:
            raise InvalidArgumentError(f"psi has {hp.q} lengthscales per component, design has dimension {self.q}")
        return hp.sigma2, hp.psi


def neg_log_marginal(sigma2, psi, beta, data):
    """Negative log marginal likelihood ``l(phi)`` (up to a hyperparameter-free constant).

    Raises ``NumericError`` if ``Delta + K_phi`` cannot be factored.
    """
    return MarginalLikelihood(data)(sigma2, psi, beta)


def profile_beta(sigma2, psi, data):
    """Closed-form minimizer of ``l`` over ``beta`` at fixed variances and lengthscales."""
    return MarginalLikelihood(data).profile_beta(sigma2, psi)


def default_bounds(data, config=None):
    """Log-space search box, one ``(low, high)`` row per free parameter."""
    config = OptimizerConfig() if config is None else config
    p, q = data.p, data.design.shape[1]
    if config.log_sigma2_bounds is not None:
        s2b = np.asarray(config.log_sigma2_bounds, float)
    else:
        vz = np.var(data.theta_stack)
        if not vz > 0:
            vz = float(np.mean(np.diagonal(data.delta, axis1=1, axis2=2)))
        s2b = np.log(vz) + np.log([1e-4, 1e4])
    if config.log_psi_bounds is not None:
        psib = np.tile(np.asarray(config.log_psi_bounds, float), (q, 1))
    else:
        rng = np.ptp(data.design, axis=0)
        rng = np.where(rng > 0, rng, 1.0)
        psib = np.column_stack([np.log(0.01 * rng), np.log(10.0 * rng)])
    return np.vstack([np.tile(s2b, (p, 1)), np.tile(psib, (p, 1))])


def _split(x, p, q):
    return np.exp(x[:p]), np.exp(x[p:]).reshape(p, q)


def fit_hyperparameters(data, config=None):
    """Maximize the marginal likelihood over ``phi`` with ``beta`` profiled.

    Each start runs a bounded Nelder-Mead search over ``(log sigma2_u,
    log psi_u)``; starts come from a Latin hypercube over the search box.
    The best start (lowest index on ties) wins. Evaluations whose
    factorization fails count as ``+inf``.
    """
    config = OptimizerConfig() if config is None else config
    objective = MarginalLikelihood(data)
    p, q = objective.p, objective.q
    bounds = default_bounds(data, config)
    box = LambdaDistribution(bounds[:, 0], bounds[:, 1])
    starts = lhs_uniform(config.n_starts, box, config.seed).points
    width = bounds[:, 1] - bounds[:, 0]

    trace = []
    start_nll = np.full(config.n_starts, np.inf)
    final_nll = np.full(config.n_starts, np.inf)
    best = (np.inf, None, None)

    for s, x0 in enumerate(starts):
        count = [0]

        def f(x, s=s, count=count):
            try:
                val, _ = objective.profiled(*_split(x, p, q))
            except NumericError:
                val = np.inf
            if not np.isfinite(val):
                val = np.inf
            trace.append((s, count[0], *x, val))
            count[0] += 1
            return val

        start_nll[s] = f(x0)
        # simplex scaled to the box rather than to |x0|
        simplex = np.vstack([x0, x0 + np.diag(0.1 * width)])
        over = simplex > bounds[:, 1]
        simplex[over] = (x0 - 0.1 * width)[np.nonzero(over)[1]]
        res = optimize.minimize(
            f, x0, method="Nelder-Mead", bounds=bounds,
            options={"initial_simplex": simplex, "xatol": config.xatol,
                     "fatol": config.fatol, "maxfev": config.max_evals},
        )
        x_best, f_best = res.x, res.fun
        if start_nll[s] < f_best:
            x_best, f_best = x0, start_nll[s]
        final_nll[s] = f_best
        logger.debug("start %d: nll %.6g -> %.6g (%d evals)", s, start_nll[s], f_best, count[0])
        if f_best < best[0]:
            best = (f_best, x_best, s)

    if best[1] is None:
        raise FittingError("marginal likelihood could not be evaluated from any start")
    sigma2, psi = _split(best[1], p, q)
    nll, beta = objective.profiled(sigma2, psi)
    cols = (["start", "eval"] + [f"log_sigma2_{u + 1}" for u in range(p)]
            + [f"log_psi_{u + 1}_{d + 1}" for u in range(p) for d in range(q)] + ["nll"])
    return HyperFit(HyperParams(beta, sigma2, psi), nll, np.array(trace, dtype=float),
                    start_nll, final_nll, bounds, cols)
