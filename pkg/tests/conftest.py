import numpy as np
import pytest

from gplincc.linearization import CalibrationData, gls_blocks


def random_spd(rng, n, scale=1.0):
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T / n + 0.5 * np.eye(n))


def random_calibration(rng, p, m, n, q=1):
    """Small random calibration problem with well-conditioned GLS blocks."""
    design = np.sort(rng.uniform(0.0, 1.0, (m, q)), axis=0)
    slopes = rng.uniform(0.5, 2.0, (m, n, p)) + rng.standard_normal((m, n, p)) * 0.3
    z = rng.standard_normal(n) + 1.0
    noise = rng.uniform(0.2, 1.0, n)
    theta, delta = gls_blocks(slopes, z, noise)
    G = np.concatenate(list(slopes), axis=1)
    return CalibrationData(design, G, delta, theta, noise), slopes, z


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


#: One line per acceptance criterion, filled by test_acceptance.py.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
