"""Analytic test problems with known calibration functions.

* Example 1: constant system ``r = 5`` observed with variance 2, model
  ``y = lambda * theta``, ``lambda ~ U[1, 10]``; the calibration function is
  ``theta(lambda) = 5 / lambda``.
* Example 2: two-component model built so that ``g_lambda(x)^T theta(lambda)``
  equals the system response for every lambda (compensation holds).
* Example 3: one-component model whose response depends on lambda, with
  data generated at ``lambda_0``; compensation fails away from ``lambda_0``.

Control points are equally spaced, endpoints included. Example 2 uses noise
variance ``(0.06 |r|)^2`` and Example 3 uses ``0.06 r^2``; the two
conventions are kept as given for each problem.
"""

import numpy as np

from ._errors import InvalidArgumentError, NumericError
from ._random import make_rng
from .design import LambdaDistribution
from .linearization import ObservationSet, SimulationBundle


def _lam(points):
    a = np.asarray(points, dtype=float)
    return a.reshape(-1) if a.ndim <= 1 else a[:, 0]


class Benchmark:
    """Common interface of the analytic problems.

    Attributes
    ----------
    example : int
    obs : ObservationSet
    dist : LambdaDistribution
    p : int
    seed : int
    """

    example = None
    p = None

    def __init__(self, obs, dist, seed):
        self.obs = obs
        self.dist = dist
        self.seed = seed

    @property
    def n(self):
        return self.obs.n

    @property
    def x(self):
        return self.obs.x

    def theta(self, points):
        """True calibration function, shape (k, p)."""
        raise NotImplementedError

    def coefficients(self, points):
        """Exact slopes ``g_lambda(x)``, shape (k, n, p)."""
        raise NotImplementedError

    def model(self, points, theta):
        """Numerical model outputs ``g_lambda(x) theta`` for one theta per point, shape (k, n)."""
        return np.einsum("kip,kp->ki", self.coefficients(points), np.atleast_2d(theta))

    def theta_box(self):
        """Sampling box for simulated theta: the true range widened by 10 % each side."""
        grid = np.linspace(self.dist.lower[0], self.dist.upper[0], 1001)
        th = self.theta(grid)
        lo, hi = th.min(axis=0), th.max(axis=0)
        pad = 0.1 * (hi - lo) + 1e-3 * np.maximum(1.0, np.abs(hi))
        return lo - pad, hi + pad

    def simulate(self, points, n_sim=5, seed=0):
        """Simulation bundle: ``n_sim`` uniform theta draws per ``(lambda_j, x_i)``."""
        points = np.atleast_1d(np.asarray(points, dtype=float))
        k = points.shape[0]
        lo, hi = self.theta_box()
        rng = make_rng(seed, 7)
        g = self.coefficients(points)
        theta = lo + rng.random((k, self.n, n_sim, self.p)) * (hi - lo)
        y = np.einsum("kip,kisp->kis", g, theta)
        li, xi, _ = np.meshgrid(np.arange(k), np.arange(self.n), np.arange(n_sim), indexing="ij")
        return SimulationBundle(li.ravel(), xi.ravel(), theta.reshape(-1, self.p), y.ravel())


class Example1(Benchmark):
    example = 1
    p = 1
    r = 5.0
    noise_var = 2.0

    def theta(self, points):
        return (self.r / _lam(points))[:, None]

    def coefficients(self, points):
        lam = _lam(points)
        return np.broadcast_to(lam[:, None, None], (lam.size, self.n, 1)).copy()


def example1_generate(n=50, seed=0):
    """``z_i = 5 + eps_i``, ``eps_i ~ N(0, 2)``."""
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    rng = make_rng(seed, 1)
    z = Example1.r + np.sqrt(Example1.noise_var) * rng.standard_normal(n)
    obs = ObservationSet(z, np.linspace(0.0, 1.0, n), np.full(n, Example1.noise_var))
    return Example1(obs, LambdaDistribution.uniform([1.0], [10.0]), seed)


def _r1(x):
    return x ** 2 + x + 1.0


def _r2(x):
    return x ** 2 + x + 4.0


class Example2(Benchmark):
    example = 2
    p = 2

    @staticmethod
    def response(x):
        return _r1(x) + _r2(x)

    def theta(self, points):
        lam = _lam(points)
        t1 = lam * np.sin(10.0 * lam) + 1.0
        t2 = np.sin(2.0 * np.pi * lam / 10.0) + 0.2 * np.sin(20.0 * np.pi * lam / 2.5) + 1.75
        return np.column_stack([t1, t2])

    def coefficients(self, points):
        th = self.theta(points)
        x = self.x
        return np.stack([_r1(x)[None, :] / th[:, 0, None], _r2(x)[None, :] / th[:, 1, None]], axis=2)


def example2_generate(n=50, seed=0):
    """``z_i = r_1(x_i) + r_2(x_i) + eps_i`` on ``x`` in ``[-4, 4]``, sd ``0.06 |r(x_i)|``."""
    if n < 2:
        raise InvalidArgumentError("n must be at least 2")
    x = np.linspace(-4.0, 4.0, n)
    r = Example2.response(x)
    var = (0.06 * np.abs(r)) ** 2
    rng = make_rng(seed, 2)
    z = r + np.sqrt(var) * rng.standard_normal(n)
    return Example2(ObservationSet(z, x, var), LambdaDistribution.uniform([0.0], [1.0]), seed)


class Example3(Benchmark):
    example = 3
    p = 1

    def __init__(self, obs, dist, seed, lambda0):
        super().__init__(obs, dist, seed)
        self.lambda0 = lambda0

    @staticmethod
    def response(x, lam):
        """``r_lambda(x) = 3 x^2 + 2 lambda^2 x + 1 + lambda``, broadcast over ``lam[:, None]``."""
        lam = np.asarray(lam, dtype=float)
        return 3.0 * x ** 2 + 2.0 * lam ** 2 * x + 1.0 + lam

    def theta(self, points):
        lam = _lam(points)
        return (1.0 + lam * np.sin(10.0 * lam))[:, None]

    def coefficients(self, points):
        lam = _lam(points)
        r = self.response(self.x[None, :], lam[:, None])
        return (r / self.theta(lam))[:, :, None]

    def alpha(self, points):
        """Discrepancy ratio ``r_lambda0(x) / r_lambda(x)``, shape (k, n)."""
        lam = _lam(points)
        return self.response(self.x[None, :], self.lambda0) / self.response(self.x[None, :], lam[:, None])


def example3_generate(n=50, lambda0=0.5, seed=0):
    """``z_i = r_{lambda0}(x_i) + eps_i`` on ``x`` in ``[-2, 2]`` with variance ``0.06 r^2``."""
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    if not 0.0 <= lambda0 <= 1.0:
        raise InvalidArgumentError("lambda0 must lie in [0, 1]")
    x = np.linspace(-2.0, 2.0, n)
    # r_lambda has negative discriminant on [0, 1]; check the grid anyway
    grid = np.linspace(0.0, 1.0, 201)
    if np.any(Example3.response(x[None, :], grid[:, None]) <= 0):
        raise NumericError("degenerate benchmark: r_lambda(x) vanishes on the grid")
    r = Example3.response(x, lambda0)
    var = 0.06 * r ** 2
    rng = make_rng(seed, 3)
    z = r + np.sqrt(var) * rng.standard_normal(n)
    return Example3(ObservationSet(z, x, var), LambdaDistribution.uniform([0.0], [1.0]), seed, lambda0)


def generate(example, n=50, seed=0, lambda0=0.5):
    """Dispatch to the generator for ``example`` in ``{1, 2, 3}``."""
    if example == 1:
        return example1_generate(n, seed)
    if example == 2:
        return example2_generate(n, seed)
    if example == 3:
        return example3_generate(n, lambda0, seed)
    raise InvalidArgumentError(f"unknown example {example!r}")
