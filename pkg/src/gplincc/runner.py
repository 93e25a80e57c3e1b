"""End-to-end pipelines over the analytic benchmarks.

``run_example`` reproduces one benchmark run and writes every intermediate
artifact as CSV; ``replicate_study`` repeats the fit over independent data
and designs and tabulates per-component MSEs.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from ._errors import GPLinCCError
from .benchmarks import generate
from .design import lhs_uniform, sample_iid
from .diagnostics import compensation_coverage, loo_posterior, mse_per_component, sample_output_mixture
from .hyperparams import OptimizerConfig, fit_hyperparameters
from .linearization import LinearizedModel, assemble_calibration_matrices, fit_linear_coefficients
from .posterior import build_prior, posterior_theta
from .predictive import predict, target_gp, target_jeffreys

logger = logging.getLogger(__name__)

ESTIMATORS = ("pred", "target", "targetGP")


def derive_seed(base, *path):
    """Deterministic 63-bit child seed of ``base`` for a named sub-task."""
    ss = np.random.SeedSequence([int(base)] + [int(p) for p in path])
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


@dataclass
class RunConfig:
    """Parameters shared by the pipelines. Every field round-trips through the manifest."""

    example: int = 1
    n: int = 50
    m: int = 10
    k: int = 500
    n_lambda: int = 1000
    seed: int = 0
    alpha: float = 0.05
    pairs: int = 5000
    lambda0: float = 0.5
    coverage: bool = False
    coefficients: str = "exact"
    n_sim: int = 5
    starts: int = 10
    max_evals: int = 2000
    reps: int = 100
    n_set: str = "50,100"
    m_set: str = "10,15,20"
    workers: int = 0
    out: str = "gplincc-out"

    def __post_init__(self):
        # coerce string values from config files and env vars
        for f in fields(self):
            val, typ = getattr(self, f.name), type(f.default)
            if isinstance(val, str) and typ is bool:
                val = val.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(val, str) and typ in (int, float):
                val = typ(val) if typ is float else int(float(val))
            setattr(self, f.name, val)
        if self.example not in (1, 2, 3):
            raise GPLinCCError(f"example must be 1, 2 or 3, got {self.example}")
        for name in ("n", "m", "k", "n_lambda", "pairs", "reps", "starts", "max_evals", "n_sim"):
            if getattr(self, name) < 1:
                raise GPLinCCError(f"{name} must be positive")
        if not 0 < self.alpha < 1:
            raise GPLinCCError("alpha must lie in (0, 1)")
        if self.coefficients not in ("exact", "simulated"):
            raise GPLinCCError("coefficients must be 'exact' or 'simulated'")

    @property
    def n_values(self):
        return [int(v) for v in str(self.n_set).split(",") if v.strip()]

    @property
    def m_values(self):
        return [int(v) for v in str(self.m_set).split(",") if v.strip()]

    def optimizer(self, seed):
        return OptimizerConfig(n_starts=self.starts, max_evals=self.max_evals, seed=seed)

    def as_dict(self):
        return asdict(self)


def _support_grid(dist, k):
    return np.linspace(dist.lower[0], dist.upper[0], k)[:, None]


def calibrate(bench, m, cfg, seed):
    """Design, coefficients, hyperparameter fit and posterior for one benchmark draw."""
    design = lhs_uniform(m, bench.dist, derive_seed(seed, 1)).points
    if cfg.coefficients == "exact":
        lin = LinearizedModel.exact(bench.coefficients(design))
    else:
        bundle = bench.simulate(design, cfg.n_sim, derive_seed(seed, 5))
        lin = fit_linear_coefficients(bundle, force_zero_intercept=True)
    data = assemble_calibration_matrices(lin, bench.obs, design)
    fit = fit_hyperparameters(data, cfg.optimizer(derive_seed(seed, 2)))
    prior = build_prior(design, fit.hyper)
    post = posterior_theta(data, prior)
    return design, lin, data, fit, prior, post


def estimator_means(bench, points, fit, prior, post):
    """Means of the predictive and both targets at ``points``, each shape (k, p)."""
    g = bench.coefficients(points)
    return {
        "pred": predict(points, post, prior).mean_matrix(),
        "target": target_jeffreys(points, g, bench.obs).mean_matrix(),
        "targetGP": target_gp(points, g, bench.obs, fit.hyper, joint=False).mean_matrix(),
    }


def run_example(cfg):
    """Run one benchmark end to end and write its artifacts to ``cfg.out``."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed
    bench = generate(cfg.example, cfg.n, derive_seed(seed, 0), cfg.lambda0)
    design, lin, data, fit, prior, post = calibrate(bench, cfg.m, cfg, seed)
    logger.info("fitted phi: beta=%s sigma2=%s psi=%s", fit.hyper.beta, fit.hyper.sigma2, fit.hyper.psi.ravel())

    io.write_design(out / "design.csv", design)
    io.write_observations(out / "observations.csv", bench.obs)
    io.write_coefficients(out / "coefficients.csv", lin)
    io.write_hyperfit(out / "hyperfit.csv", fit.hyper, fit.nll)
    io.write_trace(out / "hyperfit_trace.csv", fit)
    io.write_gaussian(out / "posterior_mean.csv", out / "posterior_cov.csv", post)

    grid = _support_grid(bench.dist, cfg.k)
    pred = predict(grid, post, prior)
    io.write_predictions(out / "predictions.csv", grid, pred.mean_matrix(), pred.marginal_var())
    g_grid = bench.coefficients(grid)
    tj = target_jeffreys(grid, g_grid, bench.obs)
    io.write_predictions(out / "targets_jeffreys.csv", grid, tj.mean_matrix(), tj.marginal_var())
    tg = target_gp(grid, g_grid, bench.obs, fit.hyper, joint=False)
    io.write_predictions(out / "targets_gp.csv", grid, tg.mean_matrix(), tg.marginal_var())
    io.write_table(out / "truth.csv", [f"lambda_{d + 1}" for d in range(grid.shape[1])]
                   + [f"theta_{u + 1}" for u in range(bench.p)],
                   (np.r_[grid[i], bench.theta(grid)[i]] for i in range(grid.shape[0])))

    lam = sample_iid(bench.dist, cfg.n_lambda, derive_seed(seed, 3))
    truth = bench.theta(lam)
    means = estimator_means(bench, lam, fit, prior, post)
    rows = [(name, u + 1, v) for name in ESTIMATORS
            for u, v in enumerate(mse_per_component(truth, means[name]))]
    io.write_table(out / "mse.csv", ["estimator", "component", "mse"], rows)

    if cfg.example == 3 or cfg.coverage:
        rep = compensation_coverage(cfg.alpha, None, cfg.pairs, bench.dist, bench.obs, lin, design,
                                    fit.hyper, bench.coefficients, seed=derive_seed(seed, 4))
        io.write_coverage(out / "coverage.csv", rep)
        _write_output_densities(out, bench, lin, design, fit.hyper, derive_seed(seed, 6))

    manifest = {"command": "example", "version": __version__,
                "n_simulations": data.metadata.get("n_simulations", 0), **cfg.as_dict()}
    manifest.pop("out")
    io.write_keyvalue(out / "manifest.txt", manifest)
    return out


def _write_output_densities(out, bench, lin, design, hyper, seed):
    """Leave-one-out output densities at a few lambdas for the first and fourth observation."""
    x_idx = [i for i in (0, 3) if i < bench.n]
    lams = np.linspace(bench.dist.lower[0], bench.dist.upper[0], 6)[1:-1, None]
    rows, samples = [], []
    for i in x_idx:
        fold = loo_posterior(i, bench.obs, lin, design, hyper)
        pred = predict(lams, fold.posterior, fold.prior)
        g = bench.coefficients(lams)[:, i]
        mu = np.einsum("kp,kp->k", g, pred.mean_matrix())
        var = np.einsum("kp,kpq,kq->k", g, pred.cov_blocks, g)
        rows.extend((lams[j, 0], i, mu[j], var[j]) for j in range(len(lams)))
        lam_s, draw = sample_output_mixture(i, 1000, bench.dist, bench.obs, lin, design, hyper,
                                            bench.coefficients, seed=derive_seed(seed, i), fold=fold)
        samples.extend((i, lam_s[s, 0], draw[s]) for s in range(draw.size))
    io.write_table(out / "output_densities.csv", ["lambda_1", "x_index", "mean", "var"], rows)
    io.write_table(out / "output_mixture_samples.csv", ["x_index", "lambda_1", "output"], samples)


def _replicate_task(args):
    cfg, n, m, rep, task_seed = args
    bench = generate(cfg.example, n, derive_seed(task_seed, 0), cfg.lambda0)
    try:
        _, _, _, fit, prior, post = calibrate(bench, m, cfg, task_seed)
        lam = sample_iid(bench.dist, cfg.n_lambda, derive_seed(task_seed, 3))
        truth = bench.theta(lam)
        means = estimator_means(bench, lam, fit, prior, post)
        return [(cfg.example, n, m, rep, name, u + 1, v, "ok") for name in ESTIMATORS
                for u, v in enumerate(mse_per_component(truth, means[name]))]
    except (GPLinCCError, np.linalg.LinAlgError) as exc:
        msg = f"error: {type(exc).__name__}: {exc}".replace(",", ";")
        return [(cfg.example, n, m, rep, name, u + 1, float("nan"), msg)
                for name in ESTIMATORS for u in range(bench.p)]


def replicate_study(cfg):
    """Replicated MSE study over ``cfg.n_values x cfg.m_values x cfg.reps``.

    Task ``t`` (in ``n, m, rep`` order) uses seed ``cfg.seed + t``. Rows are
    written in task order whatever the worker count.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    for n in cfg.n_values:
        for m in cfg.m_values:
            for rep in range(cfg.reps):
                tasks.append((cfg, n, m, rep, cfg.seed + len(tasks)))
    workers = cfg.workers or os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replicate_task, tasks))
    else:
        results = [_replicate_task(t) for t in tasks]
    header = ["example", "n", "m", "rep", "estimator", "component", "mse", "status"]
    path = io.write_table(out / "mse_table.csv", header, (row for rows in results for row in rows))
    manifest = {"command": "replicate", "version": __version__, **cfg.as_dict()}
    manifest.pop("out")
    io.write_keyvalue(out / "manifest.txt", manifest)
    return path
