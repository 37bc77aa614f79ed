import numpy as np
import pytest

from nshs.field import RunConfig, make_grid
from nshs.solvers import bump_datum, run


@pytest.fixture(scope="session")
def cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def grid(cfg):
    return make_grid(cfg.ny, cfg.ymax, cfg.nu)


@pytest.fixture(scope="session")
def bump(cfg, grid):
    return bump_datum(cfg, grid)


@pytest.fixture(scope="session")
def mild_traj(cfg, bump):
    return run(cfg, bump, "mild")


@pytest.fixture(scope="session")
def direct_traj(cfg, bump):
    return run(cfg, bump, "direct")


def rel_l2(a, b, grid):
    w = grid.quad_weights
    return float(np.sqrt((np.abs(a - b) ** 2 @ w).sum() / (np.abs(b) ** 2 @ w).sum()))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE
    except ImportError:
        return
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
