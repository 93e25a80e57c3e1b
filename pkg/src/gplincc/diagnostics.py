"""Accuracy scores and the leave-one-out compensation check.

If the calibrated model ``g_lambda(x_i)^T theta(lambda)`` does not depend on
lambda, then for two independent draws ``lambda_1, lambda_2`` the difference
of their leave-one-out predictive outputs at ``x_i`` is a centered normal,
and its ``1 - alpha`` credible interval covers zero. The empirical
coverage over many pairs falling below ``1 - alpha`` flags a lambda
dependence the method cannot represent.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._errors import InvalidArgumentError, NumericError
from ._random import make_rng
from .design import sample_iid
from .linearization import assemble_calibration_matrices
from .posterior import GaussianDist, build_prior, posterior_theta
from .kernels import VectorizationLayout
from .predictive import predict, predict_pairs

#: Values of sigma_i^2 below this are treated as numerical failures.
NEG_VAR_TOL = 1e-10
VAR_FLOOR = 1e-12


def mse_per_component(reference, predicted):
    """Empirical MSE per component: ``mean_j (reference[j, u] - predicted[j, u])^2``."""
    reference = np.asarray(reference, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if reference.ndim == 1:
        reference = reference[:, None]
    if predicted.ndim == 1:
        predicted = predicted[:, None]
    if reference.shape != predicted.shape:
        raise InvalidArgumentError(f"shape mismatch: {reference.shape} vs {predicted.shape}")
    return np.mean((reference - predicted) ** 2, axis=0)


def model_output_predictive(g, mean, cov):
    """Distribution of the model output ``g theta`` for ``theta ~ N(mean, cov)``.

    Parameters
    ----------
    g : ndarray, shape (n, p)
    mean : ndarray, shape (p,)
    cov : ndarray, shape (p, p)
    """
    g = np.atleast_2d(np.asarray(g, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if g.shape[1] != mean.size or cov.shape != (mean.size, mean.size):
        raise InvalidArgumentError("dimension mismatch between coefficients and predictive")
    out = g @ cov @ g.T
    return GaussianDist(g @ mean, 0.5 * (out + out.T), VectorizationLayout(1, g.shape[0]))


@dataclass(frozen=True)
class LeaveOneOut:
    """Posterior refit without observation ``i`` (hyperparameters unchanged)."""

    i: int
    prior: object
    posterior: GaussianDist


def loo_posterior(i, obs, lin, design, hyper):
    """Refit the design posterior with observation ``i`` removed from every block."""
    if obs.n < 2:
        raise InvalidArgumentError("leave-one-out needs at least two observations")
    if not 0 <= i < obs.n:
        raise InvalidArgumentError(f"observation index {i} out of range")
    data = assemble_calibration_matrices(lin.drop_observation(i), obs.drop(i), design)
    prior = build_prior(data.design, hyper)
    return LeaveOneOut(i, prior, posterior_theta(data, prior))


def loo_predictive(i, lam, g_lam, obs, lin, design, hyper, fold=None):
    """Leave-one-out predictive of the scalar output ``g_lam[i] @ theta(lam)``.

    Parameters
    ----------
    i : int
        Held-out observation.
    lam : array_like, shape (q,)
    g_lam : ndarray, shape (n, p)
        Exact coefficients at ``lam`` for all observations.
    fold : LeaveOneOut, optional
        Reuse a refit from ``loo_posterior``.

    Returns
    -------
    mean, var : float
    """
    fold = loo_posterior(i, obs, lin, design, hyper) if fold is None else fold
    pred = predict(np.atleast_2d(lam), fold.posterior, fold.prior)
    gi = np.asarray(g_lam, dtype=float)[i]
    out = model_output_predictive(gi[None, :], pred.mean, pred.cov_blocks[0])
    return float(out.mean[0]), float(out.cov[0, 0])


@dataclass(frozen=True)
class CoverageReport:
    """Empirical coverage of zero by the pairwise difference intervals, per observation."""

    x_index: np.ndarray
    x_value: np.ndarray
    coverage: np.ndarray
    alpha: float
    N: int
    seed: int


def pair_statistics(fold, pairs_a, pairs_b, g_a, g_b):
    """Mean and variance of ``g_a^T theta(a) - g_b^T theta(b)`` for each pair.

    ``g_a`` and ``g_b`` are the coefficient rows at the held-out observation,
    shape (N, p).
    """
    mean_a, mean_b, cov_aa, cov_bb, cov_ab = predict_pairs(pairs_a, pairs_b, fold.posterior, fold.prior)
    mu = np.einsum("kp,kp->k", g_a, mean_a) - np.einsum("kp,kp->k", g_b, mean_b)
    var = (np.einsum("kp,kpq,kq->k", g_a, cov_aa, g_a)
           - 2.0 * np.einsum("kp,kpq,kq->k", g_a, cov_ab, g_b)
           + np.einsum("kp,kpq,kq->k", g_b, cov_bb, g_b))
    return mu, var


def compensation_coverage(alpha, x_indices, N, dist, obs, lin, design, hyper, coefficients,
                          seed=0, pairs=None):
    """Leave-one-out coverage test of the compensation hypothesis.

    Parameters
    ----------
    alpha : float
        Interval level is ``1 - alpha``.
    x_indices : sequence of int or None
        Observations to test (all when ``None``).
    N : int
        Number of i.i.d. ``(lambda_1, lambda_2)`` pairs.
    dist : LambdaDistribution
    obs, lin, design, hyper
        Full data, coefficients at the design, and fitted hyperparameters.
    coefficients : callable
        ``coefficients(points) -> (k, n, p)`` exact slopes at arbitrary lambda.
    pairs : tuple of arrays, optional
        Explicit ``(lambda_1, lambda_2)`` point sets, overriding sampling.
    """
    if not 0 < alpha < 1:
        raise InvalidArgumentError("alpha must lie in (0, 1)")
    x_indices = np.arange(obs.n) if x_indices is None else np.asarray(x_indices, dtype=int)
    if pairs is None:
        # one stream for both members so pairs are i.i.d. from dist x dist
        both = sample_iid(dist, 2 * N, seed)
        pairs_a, pairs_b = both[:N], both[N:]
    else:
        pairs_a, pairs_b = (np.asarray(a, dtype=float).reshape(len(a), -1) for a in pairs)
        N = pairs_a.shape[0]
    g_a_all = coefficients(pairs_a)
    g_b_all = coefficients(pairs_b)
    q = stats.norm.ppf(1.0 - alpha / 2.0)
    cov = np.empty(x_indices.size)
    for c, i in enumerate(x_indices):
        fold = loo_posterior(int(i), obs, lin, design, hyper)
        mu, var = pair_statistics(fold, pairs_a, pairs_b, g_a_all[:, i], g_b_all[:, i])
        if np.any(var < -NEG_VAR_TOL):
            raise NumericError(f"negative pair variance {var.min():.3e} at observation {i}")
        var = np.maximum(var, VAR_FLOOR)
        cov[c] = np.mean(np.abs(mu) <= q * np.sqrt(var))
    x = obs.x if obs.x.ndim == 1 else obs.x[:, 0]
    return CoverageReport(x_indices, x[x_indices], cov, float(alpha), int(N), int(seed))


def sample_output_mixture(i, size, dist, obs, lin, design, hyper, coefficients, seed=0, fold=None):
    """Monte-Carlo draws of the output at ``x_i`` with lambda integrated over ``dist``.

    Uses the leave-one-out predictive when ``fold`` is given, otherwise the
    full-data posterior.
    """
    rng = make_rng(seed, 11)
    lam = sample_iid(dist, size, seed)
    if fold is None:
        data = assemble_calibration_matrices(lin, obs, design)
        prior = build_prior(data.design, hyper)
        post = posterior_theta(data, prior)
    else:
        prior, post = fold.prior, fold.posterior
    pred = predict(lam, post, prior)
    g = coefficients(lam)[:, i]
    mu = np.einsum("kp,kp->k", g, pred.mean_matrix())
    var = np.maximum(np.einsum("kp,kpq,kq->k", g, pred.cov_blocks, g), 0.0)
    return lam, mu + np.sqrt(var) * rng.standard_normal(size)
