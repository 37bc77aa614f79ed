import csv
import dataclasses
import io
import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from nshs.biot_savart import energy
from nshs.field import RunConfig, VorticityState, make_grid
from nshs.harness import (
    ConvergenceTable,
    certified_T,
    gamma_search,
    kato_monitor,
    loglog_slope,
    norm_history,
    pad_modes,
    run_convergence,
    velocity_distance,
)
from nshs.solvers import Trajectory, bump_datum, run


def _shear_traj(nu, T=0.1, n_snap=11):
    cfg = RunConfig(nu=nu, K=1)
    g = make_grid(128, 8.0, nu)
    st = VorticityState.zeros(g, 1, config=cfg)
    st.values[1] = np.exp(-g.nodes)
    snaps = [st.replace(time=t) for t in np.linspace(0, T, n_snap)]
    return Trajectory(snaps, "mild", cfg)


def test_kato_monitor_steady_shear():
    nu, T, c = 1e-2, 0.1, 1.0
    km = kato_monitor(_shear_traj(nu, T), c)
    # omega = e^{-y} at xi = 0 gives |grad u|^2 = e^{-2y}
    diss = nu * T * 2 * math.pi * quad(lambda y: math.exp(-2 * y), 0, 8)[0]
    wall = nu * T * 2 * math.pi * quad(lambda y: math.exp(-2 * y), 0, c * nu)[0]
    assert km["dissipation"] == pytest.approx(diss, rel=1e-10)
    assert km["katowall"] == pytest.approx(wall, rel=1e-8)


def test_kato_wall_below_total(mild_traj):
    km = kato_monitor(mild_traj)
    assert 0 < km["katowall"] <= km["dissipation"]
    euler = dataclasses.replace(mild_traj, solver_kind="euler")
    assert kato_monitor(euler) == {"dissipation": 0.0, "katowall": 0.0}


def test_velocity_distance(bump):
    assert velocity_distance(bump, bump) == 0.0
    assert velocity_distance(bump, pad_modes(bump, 2 * bump.K)) == 0.0
    zero = bump.replace(values=np.zeros_like(bump.values))
    assert velocity_distance(bump, zero) == pytest.approx(math.sqrt(2 * energy(bump)), rel=1e-12)
    with pytest.raises(ValueError):
        pad_modes(bump, bump.K - 1)


def test_loglog_slope():
    x = np.array([4.0, 2.0, 1.0, 0.5])
    assert loglog_slope(x, 3 * x**0.5) == pytest.approx(0.5)
    assert math.isnan(loglog_slope(x[:2], x[:2]))


def test_certified_T():
    cfg = RunConfig(T=0.19)
    assert certified_T(cfg) == pytest.approx(0.2 - 0.02)
    assert certified_T(RunConfig(T=0.05)) == 0.05


@pytest.fixture(scope="module")
def small_table():
    cfg = RunConfig(K=4, ny=64, T=0.05)
    return run_convergence(cfg, [4e-2, 2e-2, 1e-2])


def test_convergence_table(small_table):
    t = small_table
    assert len(t.rows) == 3 and not t.metadata["failures"]
    d = t.column("sup_dist")
    assert np.all(np.diff(d) < 0)
    assert np.all(t.column("katowall") <= t.column("dissipation"))
    assert t.slope == pytest.approx(loglog_slope(t.column("nu"), d))
    rows = list(csv.reader(io.StringIO(t.to_csv())))
    assert rows[0] == list(ConvergenceTable.COLUMNS)
    assert len(rows) == 5 and rows[-1][0] == "slope"
    meta = json.loads(t.to_json())
    assert meta["metadata"]["euler_K"] == 8 and meta["rows"][0]["slope_running"] is None


def test_convergence_deterministic(small_table):
    again = run_convergence(RunConfig(K=4, ny=64, T=0.05), [4e-2, 2e-2, 1e-2])
    assert again.to_csv() == small_table.to_csv()


def test_convergence_rejects_unordered():
    with pytest.raises(ValueError):
        run_convergence(RunConfig(), [1e-3, 2e-3])


def test_norm_history(mild_traj):
    h = norm_history(mild_traj)
    assert len(h.triple) == len(mild_traj.snapshots)
    assert h.max_ratio >= 1.0 and not h.exceeded
    assert norm_history(mild_traj, factor=0.5).exceeded


def test_gamma_search_schedule():
    cfg = RunConfig(K=4, ny=96)
    res = gamma_search(cfg, bump_datum(cfg), [0.1, 0.4])
    assert res.found and res.gamma == 0.1
    assert res.tried[0]["T"] == pytest.approx(0.45 * cfg.mu0 / 0.1)
    with pytest.raises(ValueError):
        gamma_search(cfg, bump_datum(cfg), [0.4, 0.1])
