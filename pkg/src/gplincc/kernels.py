"""Matérn 5/2 covariances and the structured prior covariance of Theta_m.

Stacked vectors use the lambda-major layout: all ``p`` components of
``theta(lambda_1)``, then all components of ``theta(lambda_2)``, and so on.
Entry ``(j, u)`` (0-based) lives at index ``j * p + u``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._errors import InvalidArgumentError, NumericError

SQRT5 = np.sqrt(5.0)

#: Relative diagonal jitter added to each component block of the prior covariance.
JITTER = 1e-8
#: Largest relative jitter tried before giving up.
MAX_JITTER = 1e-4


@dataclass(frozen=True)
class ComponentKernel:
    """Matérn 5/2 kernel for one component of theta.

    Parameters
    ----------
    variance : float
        Marginal variance ``sigma_u^2``.
    lengthscales : array_like
        One positive correlation length per lambda dimension.
    """

    variance: float
    lengthscales: np.ndarray

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "variance", float(self.variance))
        if not np.isfinite(self.variance) or self.variance <= 0:
            raise InvalidArgumentError(f"kernel variance must be positive, got {self.variance}")
        if ls.ndim != 1 or ls.size == 0 or not np.all(np.isfinite(ls)) or np.any(ls <= 0):
            raise InvalidArgumentError(f"lengthscales must be positive, got {ls}")

    @property
    def dim(self):
        return self.lengthscales.size


@dataclass(frozen=True)
class VectorizationLayout:
    """Index map between ``(design point j, component u)`` and stacked position."""

    p: int
    m: int

    def __post_init__(self):
        if self.p < 1 or self.m < 1:
            raise InvalidArgumentError(f"layout needs p >= 1 and m >= 1, got p={self.p}, m={self.m}")

    @property
    def size(self):
        return self.p * self.m

    def index(self, j, u):
        return j * self.p + u

    def permutation(self):
        """Indices ``perm`` such that ``v[perm]`` is component-major.

        For a lambda-major covariance ``K``, ``K[np.ix_(perm, perm)]`` is
        block diagonal with one ``m x m`` block per component.
        """
        return np.arange(self.size).reshape(self.m, self.p).T.ravel()


def _unit_matern52(r):
    # r = distance / lengthscale, r >= 0
    s = SQRT5 * r
    return (1.0 + s + s * s / 3.0) * np.exp(-s)


def matern52(d, variance=1.0, lengthscale=1.0):
    """One-dimensional Matérn 5/2 covariance at distance ``d``.

    ``variance * (1 + sqrt(5) d/l + 5/3 (d/l)^2) * exp(-sqrt(5) d/l)``.
    Broadcasts over array ``d``.
    """
    d = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(d)):
        raise InvalidArgumentError("distance must be finite")
    if np.any(d < 0):
        raise InvalidArgumentError("distance must be nonnegative")
    if not (np.isfinite(variance) and variance > 0 and np.isfinite(lengthscale) and lengthscale > 0):
        raise InvalidArgumentError("variance and lengthscale must be positive and finite")
    out = variance * _unit_matern52(d / lengthscale)
    return out if out.ndim else float(out)


def _as_points(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise InvalidArgumentError(f"{name} must be a 1-D or 2-D array of points")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError(f"{name} contains non-finite values")
    return a


def correlation_matrix(A, B, lengthscales):
    """Unit-variance tensorized Matérn 5/2 correlation between point sets."""
    A = _as_points(A, "A")
    B = _as_points(B, "B")
    ls = np.atleast_1d(np.asarray(lengthscales, dtype=float))
    if A.shape[1] != ls.size or B.shape[1] != ls.size:
        raise InvalidArgumentError(
            f"point dimension mismatch: A has {A.shape[1]}, B has {B.shape[1]}, "
            f"kernel has {ls.size} lengthscales"
        )
    R = np.ones((A.shape[0], B.shape[0]))
    for d in range(ls.size):
        R *= _unit_matern52(np.abs(A[:, d, None] - B[None, :, d]) / ls[d])
    return R


def kernel_matrix(A, B, kernel):
    """Covariance matrix ``sigma^2 prod_d k_d(|A_id - B_jd|)`` between point sets."""
    return kernel.variance * correlation_matrix(A, B, kernel.lengthscales)


def _check_kernels(kernels, q):
    kernels = list(kernels)
    if not kernels:
        raise InvalidArgumentError("at least one component kernel is required")
    for k in kernels:
        if k.dim != q:
            raise InvalidArgumentError(f"kernel has {k.dim} lengthscales but points have dimension {q}")
    return kernels


def stack_blocks(blocks):
    """Interleave per-component ``(a, b)`` blocks into a lambda-major ``(p a, p b)`` matrix."""
    p = len(blocks)
    a, b = blocks[0].shape
    out = np.zeros((a * p, b * p))
    for u, blk in enumerate(blocks):
        out[u::p, u::p] = blk
    return out


def build_prior_cov(design, kernels, jitter=True):
    """Prior covariance ``K_phi`` of the stacked values at the design points.

    Parameters
    ----------
    design : array_like, shape (m, q)
    kernels : sequence of ComponentKernel
        One kernel per component of theta.
    jitter : bool or float
        ``True`` adds ``JITTER * sigma_u^2`` to each component diagonal and
        escalates it tenfold (up to ``MAX_JITTER``) until a Cholesky
        factorization succeeds. A float adds that relative jitter once,
        without checking. ``False`` returns the exact kernel matrix.

    Returns
    -------
    K : ndarray, shape (p m, p m)
    """
    design = _as_points(design, "design")
    kernels = _check_kernels(kernels, design.shape[1])
    blocks = [kernel_matrix(design, design, k) for k in kernels]
    K = stack_blocks(blocks)
    if jitter is False:
        return K
    variances = np.tile([k.variance for k in kernels], design.shape[0])
    if jitter is not True:
        K[np.diag_indices_from(K)] += float(jitter) * variances
        return K
    rel = JITTER
    while rel <= MAX_JITTER * (1 + 1e-9):
        Kj = K.copy()
        Kj[np.diag_indices_from(Kj)] += rel * variances
        try:
            linalg.cholesky(Kj, lower=True)
            return Kj
        except linalg.LinAlgError:
            rel *= 10.0
    cond = np.linalg.cond(K)
    raise NumericError(
        f"prior covariance not positive definite even with relative jitter {MAX_JITTER:g} "
        f"(condition number {cond:.3e}, size {K.shape[0]})"
    )


def cross_cov(points, design, kernels):
    """Cross-covariance ``C(points, design)`` in lambda-major layout, shape (p k, p m)."""
    points = _as_points(points, "points")
    design = _as_points(design, "design")
    kernels = _check_kernels(kernels, design.shape[1])
    if points.shape[1] != design.shape[1]:
        raise InvalidArgumentError("points and design have different dimensions")
    return stack_blocks([kernel_matrix(points, design, k) for k in kernels])
