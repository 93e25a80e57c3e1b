# %% [markdown]
# # A constant system seen through a scaled model
#
# The system response is the constant 5, observed 50 times with variance 2.
# The model is ``y = lambda * theta``, so for every lambda the best theta
# is ``5 / lambda``. We learn that curve from a design of 10 lambdas.

# %%
import numpy as np

from gplincc import build_prior, fit_hyperparameters, posterior_theta, predict
from gplincc.benchmarks import example1_generate
from gplincc.design import lhs_uniform
from gplincc.linearization import LinearizedModel, assemble_calibration_matrices
from gplincc.predictive import target_gp, target_jeffreys

bench = example1_generate(n=50, seed=0)
print("mean of z:", bench.obs.z.mean())

# %%
design = lhs_uniform(10, bench.dist, seed=1).points
lin = LinearizedModel.exact(bench.coefficients(design))
data = assemble_calibration_matrices(lin, bench.obs, design)
print("GLS estimates at the design:", np.round(data.theta_gls[:, 0], 3))

# %%
fit = fit_hyperparameters(data)
print(f"sigma2 = {fit.hyper.sigma2[0]:.2f}, beta = {fit.hyper.beta[0]:.2f}, psi = {fit.hyper.psi[0, 0]:.2f}")

# %%
prior = build_prior(design, fit.hyper)
post = posterior_theta(data, prior)
lam = np.linspace(1, 10, 500)[:, None]
pred = predict(lam, post, prior)
sd = np.sqrt(pred.marginal_var()[:, 0])
truth = bench.theta(lam)[:, 0]
print("band covers the truth at", np.mean(np.abs(pred.mean - truth) <= 1.96 * sd), "of the grid")

# %% [markdown]
# The Jeffreys target ``zbar / lambda`` uses the exact coefficients at
# every lambda. The GP target shrinks it slightly towards the trend.

# %%
g = bench.coefficients(lam)
tj = target_jeffreys(lam, g, bench.obs)
tg = target_gp(lam, g, bench.obs, fit.hyper, joint=False)
for i in (0, 100, 250, 499):
    print(f"lambda={lam[i, 0]:5.2f}  truth={truth[i]:.3f}  pred={pred.mean[i]:.3f}  "
          f"target={tj.mean[i]:.3f}  targetGP={tg.mean[i]:.3f}")
