"""Latin hypercube designs and i.i.d. draws from a uniform lambda box."""

from dataclasses import dataclass

import numpy as np

from ._errors import InvalidArgumentError
from ._random import make_rng


@dataclass(frozen=True)
class LambdaDistribution:
    """Uniform distribution on the box ``[lower, upper]`` (one bound per dimension).

    Only the uniform box is built in. Other distributions can be supported
    by mapping uniform designs through an inverse CDF per dimension.
    """

    lower: np.ndarray
    upper: np.ndarray
    kind: str = "uniform"

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidArgumentError("lower and upper must be 1-D arrays of equal length")
        if not np.all(lo < hi):
            raise InvalidArgumentError(f"need lower < upper componentwise, got {lo} and {hi}")
        if self.kind != "uniform":
            raise InvalidArgumentError(f"unsupported lambda distribution kind {self.kind!r}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def uniform(cls, lower, upper):
        return cls(lower, upper)

    @property
    def dim(self):
        return self.lower.size

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, points):
        points = np.atleast_2d(points)
        return np.all((points >= self.lower) & (points <= self.upper), axis=1)


@dataclass(frozen=True)
class DesignSet:
    """An ``m x q`` design drawn from ``distribution`` with ``seed``."""

    points: np.ndarray
    distribution: LambdaDistribution
    seed: int

    @property
    def m(self):
        return self.points.shape[0]

    @property
    def q(self):
        return self.points.shape[1]


def lhs_uniform(m, dist, seed):
    """Plain Latin hypercube sample of size ``m`` over ``dist``.

    Each dimension gets exactly one point per equal-width stratum, placed
    uniformly inside it; strata are paired across dimensions by independent
    random permutations.
    """
    if int(m) != m or m < 1:
        raise InvalidArgumentError(f"design size must be a positive integer, got {m}")
    m = int(m)
    rng = make_rng(seed)
    u = np.empty((m, dist.dim))
    for d in range(dist.dim):
        u[:, d] = (rng.permutation(m) + rng.random(m)) / m
    points = dist.lower + u * dist.width
    return DesignSet(points=points, distribution=dist, seed=int(seed))


def sample_iid(dist, N, seed):
    """``N`` i.i.d. uniform draws from ``dist``, shape (N, q)."""
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"sample size must be a positive integer, got {N}")
    rng = make_rng(seed)
    return dist.lower + rng.random((int(N), dist.dim)) * dist.width
