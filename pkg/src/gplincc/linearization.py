"""Linear surrogates of the numerical model in theta, and the calibration blocks they induce.

For every design point ``lambda_j`` the model output at control point
``x_i`` is approximated by ``g0[j, i] + g[j, i, :] @ theta``. Given the
observations, each design point contributes a generalized-least-squares
estimate of ``theta(lambda_j)`` with covariance ``Delta_j``; these are the
only data-dependent quantities the Gaussian-process layer needs.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._errors import InvalidArgumentError, RankError


@dataclass(frozen=True)
class ObservationSet:
    """Experimental data ``z`` at control points ``x``.

    ``noise_var`` holds the measurement variances and ``delta2`` the extra
    linearization-error variances; the likelihood uses their sum.
    """

    z: np.ndarray
    x: np.ndarray
    noise_var: np.ndarray
    delta2: np.ndarray = None

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).ravel()
        x = np.asarray(self.x, dtype=float)
        nv = np.broadcast_to(np.asarray(self.noise_var, dtype=float), z.shape).copy()
        d2 = np.zeros_like(z) if self.delta2 is None else np.broadcast_to(
            np.asarray(self.delta2, dtype=float), z.shape).copy()
        if x.shape[0] != z.size:
            raise InvalidArgumentError(f"x has {x.shape[0]} rows but z has {z.size} values")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(nv)) and np.all(np.isfinite(d2))):
            raise InvalidArgumentError("observations and variances must be finite")
        if np.any(d2 < 0) or np.any(nv + d2 <= 0):
            raise InvalidArgumentError("total observation variances must be positive")
        for name, val in (("z", z), ("x", x), ("noise_var", nv), ("delta2", d2)):
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.z.size

    @property
    def total_var(self):
        """Diagonal of ``Sigma_eps``."""
        return self.noise_var + self.delta2

    def drop(self, i):
        """Copy without observation ``i``."""
        keep = np.arange(self.n) != i
        return ObservationSet(self.z[keep], self.x[keep], self.noise_var[keep], self.delta2[keep])

    def with_delta2(self, delta2):
        return ObservationSet(self.z, self.x, self.noise_var, delta2)


@dataclass(frozen=True)
class SimulationBundle:
    """Training simulations in long format: one row per model run.

    ``lambda_index[r]`` and ``x_index[r]`` identify the design point and
    control point of run ``r``; ``theta[r]`` is the sampled parameter vector
    and ``y[r]`` the model output.
    """

    lambda_index: np.ndarray
    x_index: np.ndarray
    theta: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        li = np.asarray(self.lambda_index, dtype=int).ravel()
        xi = np.asarray(self.x_index, dtype=int).ravel()
        th = np.asarray(self.theta, dtype=float)
        if th.ndim == 1:
            th = th[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if not (li.size == xi.size == th.shape[0] == y.size):
            raise InvalidArgumentError("bundle columns have inconsistent lengths")
        if li.size and (li.min() < 0 or xi.min() < 0):
            raise InvalidArgumentError("indices must be nonnegative")
        for name, val in (("lambda_index", li), ("x_index", xi), ("theta", th), ("y", y)):
            object.__setattr__(self, name, val)

    @property
    def p(self):
        return self.theta.shape[1]

    @property
    def m(self):
        return int(self.lambda_index.max()) + 1

    @property
    def n(self):
        return int(self.x_index.max()) + 1

    @property
    def n_runs(self):
        return self.y.size


@dataclass(frozen=True)
class LinearizedModel:
    """Linear coefficients at each design point.

    Attributes
    ----------
    intercepts : ndarray, shape (m, n)
    slopes : ndarray, shape (m, n, p)
        ``slopes[j]`` is the ``n x p`` matrix ``g_{lambda_j}(x)``.
    residual_var : ndarray, shape (m, n)
        Residual variance of each regression (zero for exact coefficients).
    zero_intercept : bool
    n_runs : int
        Number of simulations used (0 when coefficients are exact).
    """

    intercepts: np.ndarray
    slopes: np.ndarray
    residual_var: np.ndarray = None
    zero_intercept: bool = False
    n_runs: int = 0

    def __post_init__(self):
        g = np.asarray(self.slopes, dtype=float)
        if g.ndim != 3:
            raise InvalidArgumentError("slopes must have shape (m, n, p)")
        g0 = np.zeros(g.shape[:2]) if self.intercepts is None else np.asarray(self.intercepts, dtype=float)
        rv = np.zeros(g.shape[:2]) if self.residual_var is None else np.asarray(self.residual_var, dtype=float)
        if g0.shape != g.shape[:2] or rv.shape != g.shape[:2]:
            raise InvalidArgumentError("intercepts/residual_var must have shape (m, n)")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(g0))):
            raise InvalidArgumentError("linear coefficients must be finite")
        object.__setattr__(self, "slopes", g)
        object.__setattr__(self, "intercepts", g0)
        object.__setattr__(self, "residual_var", rv)

    @classmethod
    def exact(cls, slopes, intercepts=None):
        g = np.asarray(slopes, dtype=float)
        zero = intercepts is None or not np.any(intercepts)
        return cls(intercepts=intercepts, slopes=g, zero_intercept=zero)

    @property
    def m(self):
        return self.slopes.shape[0]

    @property
    def n(self):
        return self.slopes.shape[1]

    @property
    def p(self):
        return self.slopes.shape[2]

    def drop_observation(self, i):
        keep = np.arange(self.n) != i
        return LinearizedModel(self.intercepts[:, keep], self.slopes[:, keep],
                               self.residual_var[:, keep], self.zero_intercept, self.n_runs)

    def delta2_from_residuals(self):
        """Per-observation linearization variance: max residual variance over design points."""
        return self.residual_var.max(axis=0)


def fit_linear_coefficients(bundle, force_zero_intercept=False):
    """Least-squares fit of ``y ~ 1 + theta`` (or ``y ~ theta``) per ``(lambda_j, x_i)``."""
    m, n, p = bundle.m, bundle.n, bundle.p
    g0 = np.zeros((m, n))
    g = np.zeros((m, n, p))
    rv = np.zeros((m, n))
    seen = np.zeros((m, n), dtype=bool)
    order = np.lexsort((bundle.x_index, bundle.lambda_index))
    li, xi = bundle.lambda_index[order], bundle.x_index[order]
    keys = li * n + xi
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    stops = np.r_[starts[1:], keys.size]
    for a, b in zip(starts, stops):
        j, i = li[a], xi[a]
        rows = order[a:b]
        th = bundle.theta[rows]
        X = th if force_zero_intercept else np.column_stack([np.ones(len(rows)), th])
        y = bundle.y[rows]
        if len(rows) < X.shape[1] or np.linalg.matrix_rank(X) < X.shape[1]:
            raise InvalidArgumentError(
                f"rank-deficient theta design at lambda_index={j}, x_index={i} "
                f"({len(rows)} runs for {X.shape[1]} coefficients)"
            )
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        dof = len(rows) - X.shape[1]
        rv[j, i] = resid @ resid / dof if dof > 0 else 0.0
        if force_zero_intercept:
            g[j, i] = coef
        else:
            g0[j, i], g[j, i] = coef[0], coef[1:]
        seen[j, i] = True
    if not seen.all():
        j, i = np.argwhere(~seen)[0]
        raise InvalidArgumentError(f"no simulations for lambda_index={j}, x_index={i}")
    return LinearizedModel(g0, g, rv, zero_intercept=bool(force_zero_intercept), n_runs=bundle.n_runs)


@dataclass(frozen=True)
class CalibrationData:
    """Per-design-point GLS summaries used by the posterior and the marginal likelihood.

    Attributes
    ----------
    design : ndarray, shape (m, q)
    G : ndarray, shape (n, p m)
        Slope matrices concatenated in lambda-major order.
    delta : ndarray, shape (m, p, p)
        GLS covariances ``(g_j^T Sigma^-1 g_j)^-1``.
    theta_gls : ndarray, shape (m, p)
        GLS estimates ``Delta_j g_j^T Sigma^-1 (z - g0_j)``.
    noise : ndarray, shape (n,)
        Diagonal of ``Sigma_eps``.
    """

    design: np.ndarray
    G: np.ndarray
    delta: np.ndarray
    theta_gls: np.ndarray
    noise: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def m(self):
        return self.delta.shape[0]

    @property
    def p(self):
        return self.delta.shape[1]

    @property
    def n(self):
        return self.noise.size

    @property
    def theta_stack(self):
        return self.theta_gls.ravel()

    def delta_matrix(self):
        """Block-diagonal ``Delta`` of shape (p m, p m)."""
        return linalg.block_diag(*self.delta)


def gls_blocks(slopes, z, noise, intercepts=None, labels=None):
    """GLS estimates and covariances for a stack of ``n x p`` coefficient matrices.

    Parameters
    ----------
    slopes : ndarray, shape (k, n, p)
    z : ndarray, shape (n,)
    noise : ndarray, shape (n,)
        Observation variances (diagonal of ``Sigma_eps``).
    intercepts : ndarray, shape (k, n), optional
        Subtracted from ``z`` per block.
    labels : sequence, optional
        Names used in error messages.

    Returns
    -------
    theta : ndarray, shape (k, p)
    cov : ndarray, shape (k, p, p)
    """
    slopes = np.asarray(slopes, dtype=float)
    k, n, p = slopes.shape
    w = 1.0 / np.asarray(noise, dtype=float)
    resp = np.broadcast_to(z, (k, n)) if intercepts is None else z[None, :] - intercepts
    theta = np.empty((k, p))
    cov = np.empty((k, p, p))
    eye = np.eye(p)
    for j in range(k):
        g = slopes[j]
        gram = g.T @ (w[:, None] * g)
        try:
            cf = linalg.cho_factor(gram, lower=True)
        except linalg.LinAlgError:
            cf = None
        # cholesky can succeed on numerically singular grams
        if cf is None or np.min(np.abs(np.diag(cf[0]))) ** 2 <= 1e-13 * np.max(np.abs(np.diag(gram))):
            name = labels[j] if labels is not None else j
            raise RankError(f"g^T Sigma^-1 g is singular at lambda {name}")
        cov[j] = linalg.cho_solve(cf, eye)
        theta[j] = linalg.cho_solve(cf, g.T @ (w * resp[j]))
    cov = 0.5 * (cov + cov.transpose(0, 2, 1))
    return theta, cov


def assemble_calibration_matrices(lin, obs, design):
    """Build ``G``, the ``Delta_j`` blocks and the GLS estimates at the design points.

    Non-zero intercepts are handled by calibrating against ``z - g0_j``.
    """
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    if lin.m < 1:
        raise InvalidArgumentError("empty design")
    if design.shape[0] != lin.m:
        raise InvalidArgumentError(f"design has {design.shape[0]} points, coefficients have {lin.m}")
    if lin.n != obs.n:
        raise InvalidArgumentError(f"coefficients cover {lin.n} observations, data has {obs.n}")
    if obs.n < lin.p:
        raise InvalidArgumentError(f"need n >= p, got n={obs.n}, p={lin.p}")
    intercepts = None if not np.any(lin.intercepts) else lin.intercepts
    labels = [tuple(np.round(row, 12)) if row.size > 1 else float(row[0]) for row in design]
    theta, delta = gls_blocks(lin.slopes, obs.z, obs.total_var, intercepts, labels)
    G = np.concatenate(list(lin.slopes), axis=1)
    meta = {"n_simulations": lin.n_runs}
    return CalibrationData(design=design, G=G, delta=delta, theta_gls=theta,
                           noise=obs.total_var.copy(), metadata=meta)
