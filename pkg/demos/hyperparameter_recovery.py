# %% [markdown]
# # Recovering GP hyperparameters from near-exact values
#
# Draw theta at 40 design points from a GP with variance 4 and lengthscale
# 0.3, observe it almost without noise, and refit. On a fixed domain only
# the ratio ``sigma2 / psi**5`` is well identified, so the two estimates
# drift together.

# %%
import numpy as np

from gplincc import HyperParams, OptimizerConfig, fit_hyperparameters
from gplincc.design import LambdaDistribution, lhs_uniform
from gplincc.kernels import build_prior_cov
from gplincc.linearization import CalibrationData

truth = HyperParams(None, [4.0], [0.3])
dist = LambdaDistribution.uniform([0.0], [1.0])
rows = []
for seed in range(10):
    d = lhs_uniform(40, dist, seed).points
    K = build_prior_cov(d, truth.kernels(), jitter=1e-8)
    rng = np.random.default_rng(seed)
    theta = np.linalg.cholesky(K) @ rng.standard_normal(40) + 1e-3 * rng.standard_normal(40)
    data = CalibrationData(d, np.ones((1, 40)), np.full((40, 1, 1), 1e-6), theta[:, None], np.ones(1))
    fit = fit_hyperparameters(data, OptimizerConfig(seed=seed))
    rows.append((fit.hyper.sigma2[0], fit.hyper.psi[0, 0]))

# %%
for s2, psi in rows:
    print(f"sigma2={s2:6.3f}  psi={psi:.3f}  sigma2/psi^5={s2 / psi ** 5:9.1f}")
print("true sigma2/psi^5 =", round(4 / 0.3 ** 5, 1))
