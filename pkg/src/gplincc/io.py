"""CSV readers and writers for every artifact the package produces.

Floats are written with 17 significant digits so that reading a file back
reproduces the stored values exactly.
"""

import csv
from pathlib import Path

import numpy as np

from .design import DesignSet
from .linearization import LinearizedModel, ObservationSet, SimulationBundle
from .params import HyperParams
from .posterior import GaussianDist
from .kernels import VectorizationLayout

CI_Z = 1.959964


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def write_table(path, header, rows):
    """Write ``rows`` (iterables of values) under ``header``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_table(path):
    """Return ``(header, rows)`` with every cell left as a string."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [row for row in r if row]
    return header, rows


def read_numeric(path):
    """Return ``(header, array)`` for an all-numeric table."""
    header, rows = read_table(path)
    arr = np.array([[float(c) for c in row] for row in rows], dtype=float).reshape(len(rows), len(header))
    return header, arr


def _col(header, arr, name):
    return arr[:, header.index(name)]


def _prefixed(header, prefix):
    return [h for h in header if h.startswith(prefix)]


# design ---------------------------------------------------------------

def write_design(path, design):
    points = design.points if isinstance(design, DesignSet) else np.atleast_2d(design)
    header = [f"lambda_{d + 1}" for d in range(points.shape[1])]
    return write_table(path, header, points)


def read_design(path):
    _, arr = read_numeric(path)
    return arr


# observations -----------------------------------------------------------

def write_observations(path, obs):
    x = obs.x if obs.x.ndim == 1 else obs.x[:, 0]
    rows = ((i, x[i], obs.z[i], obs.total_var[i]) for i in range(obs.n))
    return write_table(path, ["x_index", "x", "z", "var"], rows)


def read_observations(path):
    header, arr = read_numeric(path)
    order = np.argsort(_col(header, arr, "x_index"), kind="stable")
    arr = arr[order]
    return ObservationSet(_col(header, arr, "z"), _col(header, arr, "x"), _col(header, arr, "var"))


# coefficients -----------------------------------------------------------

def write_coefficients(path, lin):
    header = ["lambda_index", "x_index", "g0"] + [f"g1_{u + 1}" for u in range(lin.p)]
    rows = ((j, i, lin.intercepts[j, i], *lin.slopes[j, i]) for j in range(lin.m) for i in range(lin.n))
    return write_table(path, header, rows)


def read_coefficients(path):
    header, arr = read_numeric(path)
    li = _col(header, arr, "lambda_index").astype(int)
    xi = _col(header, arr, "x_index").astype(int)
    m, n = li.max() + 1, xi.max() + 1
    cols = _prefixed(header, "g1_")
    g = np.zeros((m, n, len(cols)))
    g0 = np.zeros((m, n))
    g0[li, xi] = _col(header, arr, "g0")
    for u, c in enumerate(cols):
        g[li, xi, u] = _col(header, arr, c)
    return LinearizedModel(g0, g, zero_intercept=not np.any(g0))


def write_bundle(path, bundle):
    header = ["lambda_index", "x_index"] + [f"theta_{u + 1}" for u in range(bundle.p)] + ["y"]
    rows = ((bundle.lambda_index[r], bundle.x_index[r], *bundle.theta[r], bundle.y[r])
            for r in range(bundle.n_runs))
    return write_table(path, header, rows)


def read_bundle(path):
    header, arr = read_numeric(path)
    th = np.column_stack([_col(header, arr, c) for c in _prefixed(header, "theta_")])
    return SimulationBundle(_col(header, arr, "lambda_index").astype(int),
                            _col(header, arr, "x_index").astype(int), th, _col(header, arr, "y"))


# hyperparameters ----------------------------------------------------------

def write_hyperfit(path, hyper, nll=float("nan")):
    header = ["component", "beta", "sigma2"] + [f"psi_{d + 1}" for d in range(hyper.q)] + ["nll"]
    rows = ((u + 1, hyper.beta[u], hyper.sigma2[u], *hyper.psi[u], nll) for u in range(hyper.p))
    return write_table(path, header, rows)


def read_hyperfit(path):
    header, arr = read_numeric(path)
    psi = np.column_stack([_col(header, arr, c) for c in _prefixed(header, "psi_")])
    return HyperParams(_col(header, arr, "beta"), _col(header, arr, "sigma2"), psi)


def write_trace(path, fit):
    rows = ([int(r[0]), int(r[1]), *r[2:]] for r in fit.trace)
    return write_table(path, fit.trace_columns, rows)


# Gaussian distributions ---------------------------------------------------

def write_gaussian(mean_path, cov_path, dist):
    write_table(mean_path, ["index", "mean"], enumerate(dist.mean))
    n = dist.mean.size
    rows = ((r, c, dist.cov[r, c]) for r in range(n) for c in range(n))
    write_table(cov_path, ["row", "col", "value"], rows)


def read_gaussian(mean_path, cov_path, p):
    _, m = read_numeric(mean_path)
    mean = m[np.argsort(m[:, 0], kind="stable"), 1]
    _, c = read_numeric(cov_path)
    cov = np.zeros((mean.size, mean.size))
    cov[c[:, 0].astype(int), c[:, 1].astype(int)] = c[:, 2]
    return GaussianDist(mean, cov, VectorizationLayout(p, mean.size // p))


def write_predictions(path, points, mean, var):
    """One row per (point, component) with a 95 % normal band.

    ``mean`` and ``var`` have shape (k, p).
    """
    points = np.atleast_2d(points)
    mean = np.asarray(mean).reshape(points.shape[0], -1)
    var = np.asarray(var).reshape(mean.shape)
    header = [f"lambda_{d + 1}" for d in range(points.shape[1])] + ["comp", "mean", "var", "ci_lo", "ci_hi"]

    def rows():
        for i in range(points.shape[0]):
            for u in range(mean.shape[1]):
                sd = np.sqrt(max(var[i, u], 0.0))
                yield (*points[i], u + 1, mean[i, u], var[i, u],
                       mean[i, u] - CI_Z * sd, mean[i, u] + CI_Z * sd)

    return write_table(path, header, rows())


def read_predictions(path):
    """Return ``(points, mean, var)`` with mean/var of shape (k, p)."""
    header, arr = read_numeric(path)
    q = len(_prefixed(header, "lambda_"))
    comp = _col(header, arr, "comp").astype(int)
    p = comp.max()
    points = arr[::p, :q]
    return points, _col(header, arr, "mean").reshape(-1, p), _col(header, arr, "var").reshape(-1, p)


def write_coverage(path, report):
    rows = ((i, x, report.alpha, report.N, c)
            for i, x, c in zip(report.x_index, report.x_value, report.coverage))
    return write_table(path, ["x_index", "x_value", "alpha", "N", "coverage"], rows)


# manifests ----------------------------------------------------------------

def write_keyvalue(path, mapping):
    """Flat ``key=value`` text file, one entry per line, keys sorted."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{k}={fmt(v)}" for k, v in sorted(mapping.items())]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_keyvalue(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"malformed config line: {line!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out
