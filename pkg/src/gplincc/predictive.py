"""Predictive distribution of theta at new lambda points, and the two target distributions.

The predictive mean and covariance at points ``L`` are::

    mean(L)   = m_beta(L) + C(L, D) K^-1 (E - M)
    cov(L,L') = C(L,L') - C(L,D) K^-1 C(D,L') + C(L,D) K^-1 S K^-1 C(D,L')

where ``E, S`` are the posterior mean and covariance at the design ``D``.
Every ``K^-1`` is applied through the prior's Cholesky factor.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._errors import InvalidArgumentError
from .kernels import JITTER, VectorizationLayout, _as_points, _unit_matern52, cross_cov
from .linearization import CalibrationData, gls_blocks
from .posterior import GaussianDist, TrendModel, build_prior, posterior_theta

#: Default number of prediction points processed at once.
CHUNK_SIZE = 256


@dataclass(frozen=True)
class PredictiveTheta:
    """Predictive distribution at ``points``.

    ``cov_blocks[i]`` is the ``p x p`` covariance at ``points[i]``; ``cov``
    is the full ``(p k, p k)`` matrix and is only present when requested.
    """

    points: np.ndarray
    mean: np.ndarray
    cov_blocks: np.ndarray
    layout: VectorizationLayout
    cov: np.ndarray = None

    @property
    def p(self):
        return self.layout.p

    def mean_matrix(self):
        return self.mean.reshape(-1, self.p)

    def marginal_var(self):
        return np.diagonal(self.cov_blocks, axis1=1, axis2=2).copy()

    def to_gaussian(self):
        """Joint ``GaussianDist``; block-diagonal if the full covariance was not computed."""
        cov = self.cov if self.cov is not None else linalg.block_diag(*self.cov_blocks)
        return GaussianDist(self.mean, cov, self.layout)


def _kriging_weights(points, prior):
    C = cross_cov(points, prior.design, prior.hyper.kernels())
    A = linalg.cho_solve(prior.cho, C.T).T
    return C, A


def predict(points, posterior, prior, full_cov=False, chunk_size=CHUNK_SIZE):
    """Predictive distribution of ``theta(points)`` given the design posterior.

    Parameters
    ----------
    points : array_like, shape (k, q)
    posterior : GaussianDist
        Posterior of the stacked design values (from ``posterior_theta``).
    prior : GPPrior
    full_cov : bool
        Also return the joint ``(p k, p k)`` covariance.
    chunk_size : int
        Points processed per batch for the per-point blocks.
    """
    points = _as_points(points, "points")
    hyper = prior.hyper
    p = hyper.p
    if points.shape[1] != prior.design.shape[1]:
        raise InvalidArgumentError("prediction points and design have different dimensions")
    k = points.shape[0]
    resid = posterior.mean - prior.mean
    S = posterior.cov
    mean = np.empty(k * p)
    blocks = np.empty((k, p, p))
    prior_block = np.diag(hyper.sigma2)
    for start in range(0, k, chunk_size):
        sl = slice(start, min(start + chunk_size, k))
        pts = points[sl]
        C, A = _kriging_weights(pts, prior)
        mean[sl.start * p:sl.stop * p] = prior.trend.mean(pts, hyper.beta) + A @ resid
        A3 = A.reshape(len(pts), p, -1)
        C3 = C.reshape(len(pts), p, -1)
        blk = (prior_block[None]
               - np.einsum("kum,kvm->kuv", A3, C3)
               + np.einsum("kum,mn,kvn->kuv", A3, S, A3))
        blocks[sl] = 0.5 * (blk + blk.transpose(0, 2, 1))
    full = None
    if full_cov:
        C, A = _kriging_weights(points, prior)
        Cpp = cross_cov(points, points, hyper.kernels())
        full = Cpp - A @ C.T + A @ S @ A.T
        full = 0.5 * (full + full.T)
    return PredictiveTheta(points, mean, blocks, VectorizationLayout(p, k), full)


def predict_pairs(points_a, points_b, posterior, prior, chunk_size=CHUNK_SIZE):
    """Joint predictive moments for paired points ``(a_i, b_i)``.

    Returns
    -------
    mean_a, mean_b : ndarray, shape (k, p)
    cov_aa, cov_bb, cov_ab : ndarray, shape (k, p, p)
        ``cov_ab[i]`` is ``Cov(theta(a_i), theta(b_i))``.
    """
    points_a = _as_points(points_a, "points_a")
    points_b = _as_points(points_b, "points_b")
    if points_a.shape != points_b.shape:
        raise InvalidArgumentError("paired point sets must have the same shape")
    hyper = prior.hyper
    p = hyper.p
    k = points_a.shape[0]
    resid = posterior.mean - prior.mean
    S = posterior.cov
    out = {name: np.empty((k, p)) for name in ("mean_a", "mean_b")}
    out.update({name: np.empty((k, p, p)) for name in ("cov_aa", "cov_bb", "cov_ab")})
    prior_block = np.diag(hyper.sigma2)
    for start in range(0, k, chunk_size):
        sl = slice(start, min(start + chunk_size, k))
        a, b = points_a[sl], points_b[sl]
        kc = a.shape[0]
        Ca, Aa = _kriging_weights(a, prior)
        Cb, Ab = _kriging_weights(b, prior)
        out["mean_a"][sl] = (prior.trend.mean(a, hyper.beta) + Aa @ resid).reshape(kc, p)
        out["mean_b"][sl] = (prior.trend.mean(b, hyper.beta) + Ab @ resid).reshape(kc, p)
        Aa3, Ab3 = Aa.reshape(kc, p, -1), Ab.reshape(kc, p, -1)
        Ca3, Cb3 = Ca.reshape(kc, p, -1), Cb.reshape(kc, p, -1)
        # prior covariance between a_i and b_i, per component
        corr = np.ones((kc, p))
        for u in range(p):
            for d in range(a.shape[1]):
                corr[:, u] *= _unit_matern52(np.abs(a[:, d] - b[:, d]) / hyper.psi[u, d])
        ab_prior = np.einsum("ku,uv->kuv", corr * hyper.sigma2, np.eye(p))
        for name, A1, C1, A2, base in (("cov_aa", Aa3, Ca3, Aa3, prior_block[None]),
                                       ("cov_bb", Ab3, Cb3, Ab3, prior_block[None]),
                                       ("cov_ab", Aa3, Cb3, Ab3, ab_prior)):
            blk = (base - np.einsum("kum,kvm->kuv", A1, C1)
                   + np.einsum("kum,mn,kvn->kuv", A1, S, A2))
            if name != "cov_ab":
                blk = 0.5 * (blk + blk.transpose(0, 2, 1))
            out[name][sl] = blk
    return out["mean_a"], out["mean_b"], out["cov_aa"], out["cov_bb"], out["cov_ab"]


def _check_g_star(points, g_star, obs):
    points = _as_points(points, "points")
    g_star = np.asarray(g_star, dtype=float)
    if g_star.ndim == 2:
        g_star = g_star[None]
    if g_star.ndim != 3 or g_star.shape[0] != points.shape[0] or g_star.shape[1] != obs.n:
        raise InvalidArgumentError(
            f"coefficients must have shape (k={points.shape[0]}, n={obs.n}, p), got {g_star.shape}"
        )
    return points, g_star


def target_jeffreys(points, g_star, obs):
    """Flat-prior target: independent GLS posteriors ``N(Delta_i g_i^T Sigma^-1 z, Delta_i)``.

    Parameters
    ----------
    points : array_like, shape (k, q)
    g_star : ndarray, shape (k, n, p)
        Exact linear coefficients at each point.
    obs : ObservationSet
    """
    points, g_star = _check_g_star(points, g_star, obs)
    theta, cov = gls_blocks(g_star, obs.z, obs.total_var)
    layout = VectorizationLayout(g_star.shape[2], points.shape[0])
    return GaussianDist(theta.ravel(), linalg.block_diag(*cov), layout)


def target_gp(points, g_star, obs, hyper, trend=None, joint=True):
    """Target with exact coefficients at ``points`` and the GP prior ``hyper``.

    ``joint=True`` treats the points as a design and returns the full
    conjugate posterior over all of them. ``joint=False`` conditions each
    point on its own data only (a one-point design per point), which is
    the per-lambda target used for pointwise comparisons.
    """
    points, g_star = _check_g_star(points, g_star, obs)
    theta, delta = gls_blocks(g_star, obs.z, obs.total_var)
    p = g_star.shape[2]
    k = points.shape[0]
    trend = TrendModel(p) if trend is None else trend
    if joint:
        data = CalibrationData(points, np.concatenate(list(g_star), axis=1), delta, theta, obs.total_var)
        return posterior_theta(data, build_prior(points, hyper, trend))
    # one-point design: K = diag(sigma2) plus the relative jitter
    K = np.diag(hyper.sigma2 * (1.0 + JITTER))
    M = trend.mean(points[:1], hyper.beta)
    S = delta + K[None]
    W = np.linalg.solve(S, np.broadcast_to(K, S.shape))  # (Delta_i + K)^-1 K
    mean = M[None] + np.einsum("kvu,kv->ku", W, theta - M[None])
    cov = K[None] - np.einsum("uv,kvw->kuw", K, W)
    cov = 0.5 * (cov + cov.transpose(0, 2, 1))
    return GaussianDist(mean.ravel(), linalg.block_diag(*cov), VectorizationLayout(p, k))

