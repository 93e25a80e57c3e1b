"""Command-line entry point.

Settings are resolved in increasing priority: built-in defaults, a flat
``key=value`` file given with ``--config``, ``GPLINCC_<KEY>`` environment
variables, then command-line flags.

Exit codes: 0 on success, 1 on usage errors, 2 on numerical failures.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from ._errors import GPLinCCError, InvalidArgumentError, NumericError
from .benchmarks import generate
from .design import LambdaDistribution, lhs_uniform
from .diagnostics import compensation_coverage
from .hyperparams import OptimizerConfig, fit_hyperparameters
from .linearization import assemble_calibration_matrices, fit_linear_coefficients
from .posterior import build_prior, posterior_theta
from .predictive import predict
from .runner import RunConfig, calibrate, derive_seed, replicate_study, run_example

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
ENV_PREFIX = "GPLINCC_"

logger = logging.getLogger("gplincc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p, *names):
    options = {
        "example": dict(type=int, choices=[1, 2, 3], help="benchmark id"),
        "n": dict(type=int, help="number of observations"),
        "m": dict(type=int, help="design size"),
        "k": dict(type=int, help="prediction grid size"),
        "n_lambda": dict(type=int, help="i.i.d. lambda draws for the MSE"),
        "seed": dict(type=int, help="base seed"),
        "alpha": dict(type=float, help="coverage test level"),
        "pairs": dict(type=int, help="lambda pairs for the coverage test"),
        "lambda0": dict(type=float, help="data-generating lambda for example 3"),
        "reps": dict(type=int, help="replications per (n, m)"),
        "n_set": dict(help="comma-separated observation counts"),
        "m_set": dict(help="comma-separated design sizes"),
        "workers": dict(type=int, help="worker processes (0 = all cores)"),
        "starts": dict(type=int, help="optimizer multistarts"),
        "max_evals": dict(type=int, help="objective evaluations per start"),
        "coefficients": dict(choices=["exact", "simulated"], help="coefficient source"),
        "n_sim": dict(type=int, help="simulations per (lambda, x) when coefficients are simulated"),
    }
    for name in names:
        p.add_argument("--" + name.replace("_", "-"), dest=name, default=None, **options[name])
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--config", default=None, help="key=value configuration file")


def build_parser():
    parser = _Parser(prog="gplincc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("example", help="run a benchmark end to end")
    _add_common(p, "example", "n", "m", "k", "n_lambda", "seed", "alpha", "pairs", "lambda0",
                "starts", "max_evals", "coefficients", "n_sim")
    p.add_argument("--coverage", action="store_const", const=True, default=None,
                   help="also run the coverage test for examples 1 and 2")

    p = sub.add_parser("replicate", help="replicated MSE study")
    _add_common(p, "example", "n_set", "m_set", "reps", "n_lambda", "seed", "workers", "lambda0",
                "starts", "max_evals", "coefficients", "n_sim")
    p.add_argument("--n", dest="n_set", default=None, help="alias of --n-set")
    p.add_argument("--m", dest="m_set", default=None, help="alias of --m-set")

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)

    p = sub.add_parser("design", help="Latin hypercube design over a uniform box")
    _add_common(p, "m", "seed")
    p.add_argument("--lower", type=float, nargs="+", default=None)
    p.add_argument("--upper", type=float, nargs="+", default=None)

    p = sub.add_parser("linearize", help="fit linear coefficients from a simulation bundle")
    p.add_argument("--bundle", required=True)
    p.add_argument("--zero-intercept", action="store_true")
    p.add_argument("--out", required=True)

    for name, text in (("fit", "fit hyperparameters and the design posterior"),
                       ("predict", "predictive distribution on a lambda grid or point file")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--design", required=True)
        p.add_argument("--observations", required=True)
        p.add_argument("--coefficients", dest="coefficients_file", required=True)
        _add_common(p, "seed", "starts", "max_evals")
        if name == "predict":
            p.add_argument("--hyperfit", required=True)
            p.add_argument("--points", default=None, help="CSV of prediction points")
            p.add_argument("--k", type=int, default=None)
            p.add_argument("--lower", type=float, nargs="+", default=None)
            p.add_argument("--upper", type=float, nargs="+", default=None)

    p = sub.add_parser("diagnose", help="compensation coverage test on a benchmark")
    _add_common(p, "example", "n", "m", "seed", "alpha", "pairs", "lambda0", "starts", "max_evals")
    return parser


def resolve_config(args, environ=None):
    """Merge defaults, config file, environment and flags into a ``RunConfig``."""
    environ = os.environ if environ is None else environ
    known = set(RunConfig.__dataclass_fields__)
    values = {}
    if getattr(args, "config", None):
        values.update({k: v for k, v in io.read_keyvalue(args.config).items() if k in known})
    for key in known:
        env = environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            values[key] = env
    for key in known:
        val = getattr(args, key, None)
        if val is not None:
            values[key] = val
    try:
        return RunConfig(**values)
    except (GPLinCCError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _cmd_example(args):
    cfg = resolve_config(args)
    out = run_example(cfg)
    print(out)


def _cmd_replicate(args):
    cfg = resolve_config(args)
    print(replicate_study(cfg))


def _cmd_rerun(args):
    values = io.read_keyvalue(args.manifest)
    command = values.pop("command", "example")
    known = set(RunConfig.__dataclass_fields__)
    cfg = RunConfig(**{k: v for k, v in values.items() if k in known}, out=args.out)
    if command == "example":
        print(run_example(cfg))
    elif command == "replicate":
        print(replicate_study(cfg))
    else:
        raise UsageError(f"manifest command {command!r} cannot be rerun")


def _cmd_design(args):
    cfg = resolve_config(args)
    if args.lower is None or args.upper is None:
        raise UsageError("--lower and --upper are required")
    dist = LambdaDistribution.uniform(args.lower, args.upper)
    design = lhs_uniform(cfg.m, dist, cfg.seed)
    out = Path(cfg.out)
    print(io.write_design(out / "design.csv", design))


def _cmd_linearize(args):
    bundle = io.read_bundle(args.bundle)
    lin = fit_linear_coefficients(bundle, force_zero_intercept=args.zero_intercept)
    print(io.write_coefficients(Path(args.out) / "coefficients.csv", lin))


def _load_problem(args):
    design = io.read_design(args.design)
    obs = io.read_observations(args.observations)
    lin = io.read_coefficients(args.coefficients_file)
    return design, obs, lin, assemble_calibration_matrices(lin, obs, design)


def _cmd_fit(args):
    cfg = resolve_config(args)
    design, obs, lin, data = _load_problem(args)
    fit = fit_hyperparameters(data, OptimizerConfig(n_starts=cfg.starts, max_evals=cfg.max_evals, seed=cfg.seed))
    prior = build_prior(design, fit.hyper)
    post = posterior_theta(data, prior)
    out = Path(cfg.out)
    io.write_hyperfit(out / "hyperfit.csv", fit.hyper, fit.nll)
    io.write_trace(out / "hyperfit_trace.csv", fit)
    io.write_gaussian(out / "posterior_mean.csv", out / "posterior_cov.csv", post)
    print(out)


def _cmd_predict(args):
    cfg = resolve_config(args)
    design, obs, lin, data = _load_problem(args)
    hyper = io.read_hyperfit(args.hyperfit)
    if args.points:
        points = io.read_design(args.points)
    else:
        lo = design.min(axis=0) if args.lower is None else np.asarray(args.lower)
        hi = design.max(axis=0) if args.upper is None else np.asarray(args.upper)
        if design.shape[1] != 1:
            raise UsageError("grid prediction is only available for scalar lambda; pass --points")
        points = np.linspace(lo[0], hi[0], args.k or cfg.k)[:, None]
    prior = build_prior(design, hyper)
    post = posterior_theta(data, prior)
    pred = predict(points, post, prior)
    print(io.write_predictions(Path(cfg.out) / "predictions.csv", points, pred.mean_matrix(), pred.marginal_var()))


def _cmd_diagnose(args):
    cfg = resolve_config(args)
    bench = generate(cfg.example, cfg.n, derive_seed(cfg.seed, 0), cfg.lambda0)
    design, lin, _, fit, _, _ = calibrate(bench, cfg.m, cfg, cfg.seed)
    rep = compensation_coverage(cfg.alpha, None, cfg.pairs, bench.dist, bench.obs, lin, design,
                                fit.hyper, bench.coefficients, seed=derive_seed(cfg.seed, 4))
    print(io.write_coverage(Path(cfg.out) / "coverage.csv", rep))


COMMANDS = {
    "example": _cmd_example,
    "replicate": _cmd_replicate,
    "rerun": _cmd_rerun,
    "design": _cmd_design,
    "linearize": _cmd_linearize,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "diagnose": _cmd_diagnose,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, InvalidArgumentError, FileNotFoundError) as exc:
        print(f"gplincc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, GPLinCCError, np.linalg.LinAlgError) as exc:
        print(f"gplincc: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
