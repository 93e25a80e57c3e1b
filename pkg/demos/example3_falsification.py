# %% [markdown]
# # When compensation fails
#
# The data come from the model at ``lambda0 = 0.5``. The model response
# depends on lambda in a way theta cannot absorb, so the learned curve
# tracks the data-fitted target rather than the true theta, and the
# compensation check flags the mismatch.

# %%
import numpy as np

from gplincc import predict
from gplincc.benchmarks import example3_generate
from gplincc.diagnostics import compensation_coverage, loo_posterior
from gplincc.predictive import target_jeffreys
from gplincc.runner import RunConfig, calibrate

bench = example3_generate(n=50, lambda0=0.5, seed=0)
cfg = RunConfig(example=3, n=50, m=10)
design, lin, data, fit, prior, post = calibrate(bench, cfg.m, cfg, seed=0)

lam = np.linspace(0, 1, 500)[:, None]
pred = predict(lam, post, prior).mean
target = target_jeffreys(lam, bench.coefficients(lam), bench.obs).mean
truth = bench.theta(lam)[:, 0]
rel = lambda a, b: np.linalg.norm(a - b) / np.linalg.norm(b)
print(f"relative L2: pred vs target {rel(pred, target):.3f}, pred vs truth {rel(pred, truth):.3f}")

# %% [markdown]
# The discrepancy ratio ``r_lambda0 / r_lambda`` shows how far each
# lambda sits from the data-generating one.

# %%
ratio = bench.alpha(lam)
print("discrepancy ratio range:", ratio.min().round(3), ratio.max().round(3))

# %% [markdown]
# Leave-one-out output predictive at x_1 for four lambdas.

# %%
fold = loo_posterior(0, bench.obs, lin, design, fit.hyper)
for lj in (0.2, 0.4, 0.6, 0.8):
    p = predict([[lj]], fold.posterior, fold.prior)
    g = bench.coefficients([[lj]])[0, 0]
    print(f"lambda={lj}: mean {g @ p.mean:.3f}, sd {np.sqrt(g @ p.cov_blocks[0] @ g):.3f}")

# %%
rep = compensation_coverage(0.05, None, 5000, bench.dist, bench.obs, lin, design, fit.hyper,
                            bench.coefficients, seed=4)
for i in range(0, 50, 7):
    print(f"x={rep.x_value[i]:+.2f}  coverage={rep.coverage[i]:.3f}")
