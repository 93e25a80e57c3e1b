"""Gaussian-process hyperparameters ``phi = (beta_u, sigma2_u, psi_u)``."""

from dataclasses import dataclass

import numpy as np

from ._errors import InvalidArgumentError
from .kernels import ComponentKernel


@dataclass(frozen=True)
class HyperParams:
    """Trend constants, variances and lengthscales, one row per component.

    Attributes
    ----------
    beta : ndarray, shape (p,)
    sigma2 : ndarray, shape (p,)
    psi : ndarray, shape (p, q)
    """

    beta: np.ndarray
    sigma2: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        s2 = np.atleast_1d(np.asarray(self.sigma2, dtype=float))
        p = s2.size
        beta = np.zeros(p) if self.beta is None else np.atleast_1d(np.asarray(self.beta, dtype=float))
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim == 0:
            psi = np.full((p, 1), float(psi))
        elif psi.ndim == 1:
            # p == 1: one row of q lengthscales; otherwise one lengthscale per component
            psi = psi[None, :] if p == 1 else psi.reshape(p, -1) if psi.size % p == 0 else psi
        if psi.ndim != 2 or beta.shape != (p,) or psi.shape[0] != p:
            raise InvalidArgumentError("beta, sigma2 and psi must describe the same number of components")
        if not np.all(np.isfinite(s2)) or np.any(s2 <= 0):
            raise InvalidArgumentError(f"sigma2 must be positive, got {s2}")
        if not np.all(np.isfinite(psi)) or np.any(psi <= 0):
            raise InvalidArgumentError(f"lengthscales must be positive, got {psi}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma2", s2)
        object.__setattr__(self, "psi", psi)

    @property
    def p(self):
        return self.sigma2.size

    @property
    def q(self):
        return self.psi.shape[1]

    def kernels(self):
        return [ComponentKernel(s, l) for s, l in zip(self.sigma2, self.psi)]

    def with_beta(self, beta):
        return HyperParams(beta, self.sigma2, self.psi)
