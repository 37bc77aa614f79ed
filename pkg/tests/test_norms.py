import dataclasses
import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from nshs.field import ModeField, RunConfig, VorticityState, make_grid
from nshs.norms import (
    NormParams,
    NormReport,
    continuation_values,
    l1_contour,
    mu_grid,
    mu_schedule,
    s_mu_norm,
    s_norm,
    triple_norm,
    weighted_linf,
    weighted_linf_complex,
    x_mu_norm,
    x_t_norm,
    y_mu_norm,
    y_t_norm,
    z_norm,
)


@pytest.fixture(scope="module")
def g():
    return make_grid(128, 8.0, 0.05)


def _single(g, K, xi, prof, cfg=None):
    st = VorticityState.zeros(g, K, config=cfg or RunConfig())
    v = st.values.copy()
    v[K + xi] = prof
    if xi:
        v[K - xi] = np.conj(prof)
    return st.replace(values=v)


def test_constant_mode_parts(g):
    st = _single(g, 1, 0, np.ones(g.n))
    mu = 0.05
    _, px = x_mu_norm(st, mu)
    _, py = y_mu_norm(st, mu)
    assert px[(0, 0)] == pytest.approx(1.0)  # sup of the weight is 1
    assert py[(0, 0)] == pytest.approx(1.0 + mu, rel=1e-12)
    assert px[(1, 0)] == 0 and py[(0, 1)] == pytest.approx(0, abs=1e-10)


def test_exponential_factor_in_y(g):
    cfg = RunConfig()
    st = _single(g, 1, 1, np.ones(g.n) + 0j, cfg)
    mu = 0.05
    b = 1 + mu
    _, py = y_mu_norm(st, mu)
    ref = 2 * (math.exp(cfg.eps0 * b) - 1) / cfg.eps0
    assert py[(0, 0)] == pytest.approx(ref, rel=1e-7)


def test_parts_monotone_in_mu(bump):
    p = NormParams.from_config(bump.config)
    prev = None
    for mu in (0.0, 0.02, 0.05, 0.09):
        _, parts = x_mu_norm(bump, mu, p)
        _, yparts = y_mu_norm(bump, mu, p)
        cur = np.array(list(parts.values()) + list(yparts.values()))
        if prev is not None:
            assert np.all(cur >= prev - 1e-15)
        prev = cur


def test_gap_enforced(bump):
    with pytest.raises(ValueError):
        x_mu_norm(bump, 0.1)
    late = bump.replace(time=0.39)
    with pytest.raises(ValueError):
        x_mu_norm(late, 0.01)


def test_sobolev_norms_against_quadrature(g):
    st = _single(g, 0, 0, np.exp(-3 * g.nodes))
    ref = math.sqrt(quad(lambda y: (y * math.exp(-3 * y)) ** 2, 0.5, 8.0)[0])
    assert s_norm(st) == pytest.approx(ref, rel=1e-10)
    ref2 = math.sqrt(quad(lambda y: (y * math.exp(-3 * y)) ** 2, 1.05, 8.0)[0])
    assert s_mu_norm(st, 0.05) == pytest.approx(ref2, rel=1e-10)
    # d_y^j scales by 3^j and xi-derivatives vanish at xi = 0
    assert z_norm(st) == pytest.approx((1 + 3 + 9 + 27) * ref, rel=1e-8)


def test_triple_norm_report(bump):
    r = triple_norm(bump)
    assert r.triple == pytest.approx(r.x_t + r.y_t + r.z)
    assert r.x_t == pytest.approx(x_t_norm(bump)[0])
    assert r.y_t == pytest.approx(y_t_norm(bump)[0])
    back = NormReport.from_json(r.to_json())
    assert back.triple == r.triple and back.per_mu == json.loads(json.dumps(r.per_mu))
    d = r.to_dict()
    d["version"] = 99
    with pytest.raises(ValueError):
        NormReport.from_dict(d)


def test_sup_over_mu_refines(bump):
    p = NormParams.from_config(bump.config)
    a = x_t_norm(bump, p)[0]
    b = x_t_norm(bump, dataclasses.replace(p, n_mu=64))[0]
    assert abs(a - b) <= 0.01 * b


def test_mu_schedule_and_grid():
    s = mu_schedule(0.02, 0.1, 0.25, 0.1)
    gap = 0.1 - 0.02 - 0.025
    assert (s.mu1, s.mu2) == pytest.approx((0.02 + gap / 4, 0.02 + gap / 2))
    with pytest.raises(ValueError):
        mu_schedule(0.09, 0.1, 0.25, 0.1)
    m = mu_grid(0.1, 16)
    assert m[0] == 0.0 and np.all(np.diff(m) > 0) and m[-1] < 0.1


def test_continuation_of_entire_profile(g):
    f = ModeField(1, np.exp(-g.nodes) + 0j, g)
    y = np.array([0.3 + 0.02j, 0.9 - 0.05j, 1.05 + 0.01j])
    assert np.abs(continuation_values(f, y) - np.exp(-y)).max() < 1e-8
    real = weighted_linf(f, 0.05, 0.05)
    assert weighted_linf_complex(f, 0.05, 0.05) >= real * (1 - 1e-5)
    # theta = 0 reduces the contour integral to the real segment
    assert l1_contour(f, 0.05) >= (1 - math.exp(-1)) - 1e-6
