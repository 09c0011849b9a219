"""Shared fixtures and frozen reference values.

The reference values below were computed once with a 40-digit mpmath Newton
solve of the full n-dimensional stationary system (no shooting involved) and
are frozen here as independent oracles.
"""

import numpy as np
import pytest

from neumann_homotopy import Mesh, PowerLawPair

# (p, q, n, alpha) -> (u1, u_n), 40-digit full-system solve
MP_REFERENCE = {
    (2, 3, 5, 1.0): (0.55261610866916209173, 0.71958018607136392997),
    (2, 3, 50, 1.0): (0.54873159876856896534, 0.71441179489264006524),
    (2, 5, 50, 1.0): (0.64503740152297193671, 0.87807327936031291046),
    (3, 4, 50, 1.0): (0.59458437851287238318, 0.71006826917235818994),
    (2, 3, 10, 2.0): (0.34156322891816531209, 0.40336536976034259264),
}

# Richardson ratio of u1 on n = 25, 49, 97 for p=2, q=3, alpha=1 (same solver)
MP_RICHARDSON_25 = 3.99963504650601

PAIRS = [(2, 3), (2, 5), (3, 4)]


@pytest.fixture
def pair23():
    return PowerLawPair(2, 3)


@pytest.fixture
def mesh2():
    return Mesh(2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE_RESULTS = {}


def record_criterion(k, ok, detail):
    """Store one criterion outcome; printed at the end of the session."""
    ACCEPTANCE_RESULTS[k] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
