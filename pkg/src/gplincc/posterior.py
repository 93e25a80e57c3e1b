"""Gaussian prior over the stacked design values and its conjugate posterior.

With ``Delta`` the block-diagonal GLS covariance and ``K`` the prior
covariance, the posterior of the stacked values is computed as::

    mean = M + K (Delta + K)^-1 (theta_gls - M)
    cov  = K - K (Delta + K)^-1 K

which needs a single Cholesky factorization of ``Delta + K`` and never
inverts ``K`` or ``Delta``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg

from ._errors import InvalidArgumentError, NumericError
from .kernels import VectorizationLayout, build_prior_cov


def constant_trend(k, p):
    """Basis ``H`` (shape ``(p k, p)``) of a constant trend per component, lambda-major."""
    return np.tile(np.eye(p), (k, 1))


@dataclass(frozen=True)
class TrendModel:
    """Trend ``m_beta(lambda) = h(lambda) beta`` with a per-component constant basis.

    Only constant trends are supported; ``basis(points)`` returns the
    lambda-major design matrix ``H`` for any set of points.
    """

    p: int

    def basis(self, points):
        points = np.asarray(points, dtype=float)
        k = points.shape[0] if points.ndim else 1
        return constant_trend(k, self.p)

    def mean(self, points, beta):
        return self.basis(points) @ np.asarray(beta, dtype=float)


@dataclass(frozen=True)
class GaussianDist:
    """Multivariate normal in a lambda-major layout of ``count`` points times ``p`` components."""

    mean: np.ndarray
    cov: np.ndarray
    layout: VectorizationLayout

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size) or mean.size != self.layout.size:
            raise InvalidArgumentError("mean, covariance and layout sizes disagree")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def p(self):
        return self.layout.p

    def mean_matrix(self):
        """Means reshaped to ``(count, p)``."""
        return self.mean.reshape(-1, self.p)

    def block(self, i, j=None):
        """``p x p`` covariance between points ``i`` and ``j`` (default ``j = i``)."""
        j = i if j is None else j
        p = self.p
        return self.cov[i * p:(i + 1) * p, j * p:(j + 1) * p]

    def marginal_var(self):
        """Marginal variances reshaped to ``(count, p)``."""
        return np.diag(self.cov).reshape(-1, self.p)

    def sample(self, size, rng):
        return rng.multivariate_normal(self.mean, self.cov, size=size, method="eigh")


@dataclass(frozen=True)
class GPPrior:
    """Prior over the stacked values at ``design``: mean ``M_beta`` and covariance ``K_phi``."""

    design: np.ndarray
    hyper: object
    trend: TrendModel
    mean: np.ndarray
    cov: np.ndarray

    @property
    def layout(self):
        return VectorizationLayout(self.hyper.p, self.design.shape[0])

    @cached_property
    def cho(self):
        """Cholesky factor of ``K_phi`` (lower, scipy ``cho_factor`` tuple)."""
        try:
            return linalg.cho_factor(self.cov, lower=True)
        except linalg.LinAlgError as exc:
            raise NumericError(f"prior covariance is not positive definite: {exc}") from None


def build_prior(design, hyper, trend=None):
    """Prior mean ``M_beta`` and jittered covariance ``K_phi`` at the design points."""
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    if design.shape[0] < 1:
        raise InvalidArgumentError("design must contain at least one point")
    if design.shape[1] != hyper.q:
        raise InvalidArgumentError(f"design dimension {design.shape[1]} != lengthscale dimension {hyper.q}")
    trend = TrendModel(hyper.p) if trend is None else trend
    M = trend.mean(design, hyper.beta)
    K = build_prior_cov(design, hyper.kernels(), jitter=True)
    return GPPrior(design=design, hyper=hyper, trend=trend, mean=M, cov=K)


def _factor(S, what):
    try:
        return linalg.cho_factor(S, lower=True)
    except linalg.LinAlgError:
        raise NumericError(f"{what} is not positive definite (size {S.shape[0]})") from None


def posterior_theta(data, prior):
    """Exact Gaussian posterior of the stacked design values given the data.

    Parameters
    ----------
    data : CalibrationData
    prior : GPPrior

    Returns
    -------
    GaussianDist
    """
    if data.m != prior.design.shape[0] or data.p != prior.hyper.p:
        raise InvalidArgumentError("calibration data and prior describe different designs")
    K = prior.cov
    cf = _factor(data.delta_matrix() + K, "Delta + K_phi")
    resid = data.theta_stack - prior.mean
    mean = prior.mean + K @ linalg.cho_solve(cf, resid)
    cov = K - K @ linalg.cho_solve(cf, K)
    cov = 0.5 * (cov + cov.T)
    return GaussianDist(mean, cov, prior.layout)
