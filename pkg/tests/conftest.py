import time

import pytest

from dtnlab.boundary import DecayFamily
from dtnlab.grid import make_grid
from dtnlab.solver import SolverConfig, run

# default defocusing data
DEFAULT_FAMILY = DecayFamily(A=0.5, m=2, alpha=3.0, omega=0.0, s=1.0)
# fast carrier and quartic ramp: small zero-frequency content, clean decay window
DECAY_FAMILY = DecayFamily(A=0.5, m=4, alpha=3.0, omega=8.0, s=1.0)

ACCEPTANCE_LINES = {}


def timed_run(grid, config, boundary, **kw):
    t0 = time.perf_counter()
    res = run(grid, config, boundary, **kw)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def default_pair():
    """Default run at T = 50 and its (dx, dt)-halved twin, stride 10 steps."""
    g = make_grid(40, 800, 0.005, 50)
    cfg = SolverConfig(lam=1, snapshot_stride=10)
    coarse, _ = timed_run(g, cfg, DEFAULT_FAMILY)
    fine, _ = timed_run(g.refined(2), cfg, DEFAULT_FAMILY)
    return coarse, fine


@pytest.fixture(scope="session")
def default_long():
    """Default data through T = 100 on the default grid, with its wall time."""
    return timed_run(make_grid(40, 800, 0.005, 100), SolverConfig(lam=1), DEFAULT_FAMILY)


@pytest.fixture(scope="session")
def decay_run():
    return timed_run(make_grid(40, 800, 0.005, 200), SolverConfig(lam=1), DECAY_FAMILY)[0]


@pytest.fixture(scope="session")
def focusing_family():
    return DECAY_FAMILY.scaled_to_mass(0.04)


@pytest.fixture(scope="session")
def focusing_run(focusing_family):
    return timed_run(make_grid(40, 800, 0.005, 200), SolverConfig(lam=-1), focusing_family)[0]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
