import csv
import io
import json
import math

import numpy as np
import pytest

from nshs.field import RunConfig, VorticityState, make_grid
from nshs.solvers import analytic_datum, run
from nshs.verify import (
    InequalityReport,
    arctan_identity,
    check_int_t,
    check_kernel_bounds,
    check_nonlinear_estimates,
    check_recovery,
    check_sobolev_gronwall,
    check_weight_properties,
    cutoff_phi,
    psi_bar,
    random_state,
    reports_to_csv,
    weighted_sobolev,
)


@pytest.mark.parametrize("tp,mup", [(0.5, 1.0), (0.1, 0.125), (1.8, 2.0), (0.05, 1.5)])
def test_arctan_identity_against_mpmath(tp, mup):
    # s = t' - u^2 removes the endpoint singularity
    mpmath = pytest.importorskip("mpmath")
    ref = mpmath.quad(lambda u: 2 / (mup - tp + u * u), [0, mpmath.sqrt(tp)])
    assert arctan_identity(tp, mup) == pytest.approx(float(ref), rel=1e-12)


def test_arctan_sample_value():
    assert arctan_identity(0.5, 1.0) == pytest.approx(math.pi / math.sqrt(2), rel=1e-14)


def test_int_t_report():
    r = check_int_t()
    assert r.passed
    assert r.details["identity_max_rel_error"] <= 1e-8
    assert r.details["sample_t0.5_mu1"] == pytest.approx(math.pi / math.sqrt(2), rel=1e-10)
    assert max(r.details["max_over_min_across_gamma"].values()) <= 1.05


def test_recovery_real_slice():
    r = check_recovery(n_members=8)
    assert r.passed, r.notes
    opt = r.details["one_mode_optimum"]
    assert opt == pytest.approx(1 / (0.05 * math.e))
    C1 = np.asarray(r.details["C_one_mode_X_Y"])
    assert np.all((C1 >= 0.5 * opt) & (C1 <= 2 * opt))


def test_weight_battery():
    r = check_weight_properties()
    assert r.passed
    for wname in ("piecewise", "alternative"):
        for nu, d in r.details[wname].items():
            assert d["c_ok"] and d["stable"]
    # the exponential weight's doubling constant grows as nu -> 0
    assert any("alternative" in n for n in r.notes)


def test_kernel_bounds():
    r = check_kernel_bounds()
    assert r.passed
    for fit in r.details["fits"].values():
        assert fit["C"] <= 50 and fit["theta"] >= 0.05
    assert r.details["yz_residual"] <= 1e-4


def test_nonlinear_estimates_random_state():
    cfg = RunConfig()
    r = check_nonlinear_estimates(random_state(cfg, seed=3))
    assert r.passed, r.notes
    assert set(r.details["ratios"]) >= {"N_X", "N_Y", "N_S", "u_far_i0"}
    g = make_grid(64, 8.0, 0.05)
    z = check_nonlinear_estimates(VorticityState.zeros(g, 2, config=cfg))
    assert z.passed and z.samples == 0


def test_random_state_seeded():
    cfg = RunConfig()
    a, b = random_state(cfg, seed=5), random_state(cfg, seed=5)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, random_state(cfg, seed=6).values)
    assert a.symmetry_error() == 0.0


def test_gronwall_on_nonlinear_run(mild_traj):
    r = check_sobolev_gronwall(mild_traj)
    assert r.passed and r.fitted_constant <= 100


def test_gronwall_linear_decay():
    cfg = RunConfig(K=4, ny=96, T=0.05, snapshot_every=5)
    tr = run(cfg, analytic_datum(cfg), "mild", linear=True)
    r = check_sobolev_gronwall(tr)
    assert r.passed and r.details["C_rate"] == 0.0
    assert np.all(np.diff(r.details["lhs"]) < 0)


def test_cutoffs():
    y = np.array([0.0, 0.2, 0.25, 0.375, 0.5, 3.0])
    p = psi_bar(y)
    assert p[0] == p[1] == p[2] == 0.0 and p[4] == p[5] == 1.0
    assert p[3] == pytest.approx(0.5)
    assert np.array_equal(cutoff_phi(y), y * p)


def test_weighted_sobolev_zero_inside_cutoff():
    g = make_grid(64, 8.0, 0.05)
    st = VorticityState.zeros(g, 1)
    st.values[1] = np.exp(-50 * g.nodes)
    assert weighted_sobolev(st, order=0) < 1e-10


def test_report_serialisation():
    r = InequalityReport("x", 3, 0.5, 0.5, True, ["n"], {"a": np.array([1.0, 2.0])})
    d = json.loads(r.to_json())
    assert d["pass"] is True and d["schema"] == "nshs.inequality_report"
    back = InequalityReport.from_dict(d)
    assert back.passed and back.details["a"] == [1.0, 2.0]
    rows = list(csv.reader(io.StringIO(reports_to_csv([r, back]))))
    assert rows[0] == ["name", "samples", "worst_ratio", "fitted_constant", "pass"]
    assert len(rows) == 3 and rows[1][-1] == "pass"
