"""Inviscid-limit experiments: dissipation, NS-to-Euler distance, norm histories."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math

import numpy as np

from .biot_savart import velocity
from .field import RunConfig, VorticityState, make_grid
from .norms import NormParams, triple_norm
from .solvers import Trajectory, analytic_datum, run

__all__ = [
    "ConvergenceTable",
    "NormHistory",
    "GammaResult",
    "kato_monitor",
    "run_convergence",
    "norm_history",
    "gamma_search",
    "certified_T",
    "velocity_distance",
    "loglog_slope",
    "pad_modes",
]


def certified_T(config: RunConfig):
    """min(T, mu0/(2 gamma) - 0.05 mu0/gamma)."""
    return min(config.T, config.mu0 / (2 * config.gamma) - 0.05 * config.mu0 / config.gamma)


def _grad_sq(state):
    """Per-mode |grad u|^2 profiles summed over xi (2 pi Parseval factor included)."""
    vel = velocity(state)
    xis = state.xis[:, None]
    D = state.grid.D
    terms = (
        np.abs(1j * xis * vel.u1) ** 2
        + np.abs(vel.u1 @ D.T) ** 2
        + np.abs(1j * xis * vel.u2) ** 2
        + np.abs(vel.u2 @ D.T) ** 2
    )
    return 2 * np.pi * terms.sum(axis=0)


def kato_monitor(traj: Trajectory, c=1.0):
    """Time-integrated dissipation nu int |w|^2 and the wall part nu int_{y <= c nu} |grad u|^2."""
    if traj.solver_kind == "euler" or len(traj.snapshots) < 2:
        return {"dissipation": 0.0, "katowall": 0.0}
    nu = traj.config.nu
    times = traj.times
    grid = traj.grid
    w = grid.quad_weights
    q = grid.partial_weights(0.0, c * nu)
    full = [2 * np.pi * float((np.abs(s.values) ** 2).sum(axis=0) @ w) for s in traj.snapshots]
    wall = [float(_grad_sq(s) @ q) for s in traj.snapshots]
    return {
        "dissipation": nu * float(np.trapezoid(full, times)),
        "katowall": nu * float(np.trapezoid(wall, times)),
    }


def velocity_distance(state: VorticityState, ref: VorticityState):
    """||u(state) - u(ref)||_{L^2} on the grid of ``state``; ``ref`` may carry more modes."""
    g = state.grid
    v, vr = velocity(state), velocity(ref)
    K, Kr = state.K, ref.K
    Km = max(K, Kr)
    tot = np.zeros(g.n)
    for xi in range(-Km, Km + 1):
        a1 = v.u1[xi + K] if abs(xi) <= K else 0.0
        a2 = v.u2[xi + K] if abs(xi) <= K else 0.0
        if abs(xi) <= Kr:
            r1, r2 = vr.u1[xi + Kr], vr.u2[xi + Kr]
            if ref.grid is not g:
                r1 = ref.grid.interp(r1.real, g.nodes) + 1j * ref.grid.interp(r1.imag, g.nodes)
                r2 = ref.grid.interp(r2.real, g.nodes) + 1j * ref.grid.interp(r2.imag, g.nodes)
        else:
            r1 = r2 = 0.0
        tot = tot + np.abs(a1 - r1) ** 2 + np.abs(a2 - r2) ** 2
    return math.sqrt(2 * np.pi * float(tot @ g.quad_weights))


def pad_modes(state: VorticityState, K):
    """The same field with modes |xi| <= K (zeros above the original band)."""
    if K < state.K:
        raise ValueError("padding cannot drop modes")
    vals = np.zeros((2 * K + 1, state.grid.n), dtype=complex)
    vals[K - state.K : K + state.K + 1] = state.values
    return VorticityState(vals, state.grid, state.time, state.config)


def loglog_slope(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    if len(x) < 3:
        return math.nan
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _finite_or_none(v):
    return None if isinstance(v, float) and not math.isfinite(v) else v


@dataclasses.dataclass
class ConvergenceTable:
    rows: list
    slope: float
    dissipation_slope: float
    metadata: dict

    COLUMNS = ("nu", "sup_dist", "dissipation", "katowall", "T", "slope_running")

    def column(self, name):
        return np.array([r[name] for r in self.rows])

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([repr(float(r[c])) for c in self.COLUMNS])
        w.writerow(["slope", repr(self.slope), "", "", "", ""])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_json(self, **kw):
        d = {
            "schema": "nshs.convergence",
            "rows": [{k: _finite_or_none(v) for k, v in r.items()} for r in self.rows],
            "slope": _finite_or_none(self.slope),
            "dissipation_slope": _finite_or_none(self.dissipation_slope),
            "metadata": self.metadata,
        }
        return json.dumps(d, sort_keys=True, **kw)


def run_convergence(config_base: RunConfig, nu_list, datum=analytic_datum, solver_kind="mild",
                    kato_c=1.0, euler_factor=2):
    """Viscous runs per nu against one Euler reference with ``euler_factor`` times the modes."""
    nus = [float(n) for n in nu_list]
    if any(b >= a for a, b in zip(nus, nus[1:])):
        raise ValueError("nu_list must be strictly decreasing")
    T = certified_T(config_base)
    base = dataclasses.replace(config_base, T=T, snapshot_every=1)
    # reference: the same datum zero-padded to more modes, grid clustered for the largest nu
    cfg_e = dataclasses.replace(base, K=euler_factor * base.K, nu=nus[0])
    grid_e = make_grid(cfg_e.ny, cfg_e.ymax, cfg_e.nu)
    ref = run(cfg_e, pad_modes(datum(dataclasses.replace(base, nu=nus[0]), grid_e), cfg_e.K), "euler")
    meta = {
        "config": dataclasses.asdict(base),
        "nu_list": nus,
        "solver": solver_kind,
        "datum": getattr(datum, "__name__", str(datum)),
        "euler_K": cfg_e.K,
        "kato_c": kato_c,
        "failures": {},
    }
    if not ref.ok:
        meta["failures"]["euler"] = ref.failure
    rows = []
    for nu in nus:
        cfg = dataclasses.replace(base, nu=nu)
        tr = run(cfg, datum(cfg), solver_kind)
        if not tr.ok:
            meta["failures"][repr(nu)] = tr.failure
            continue
        n = min(len(tr.snapshots), len(ref.snapshots))
        dists = [velocity_distance(tr.snapshots[k], ref.snapshots[k]) for k in range(n)]
        km = kato_monitor(tr, kato_c)
        row = {"nu": nu, "sup_dist": max(dists), "dissipation": km["dissipation"],
               "katowall": km["katowall"], "T": float(tr.times[-1])}
        rows.append(row)
        row["slope_running"] = loglog_slope([r["nu"] for r in rows], [r["sup_dist"] for r in rows])
    slope = loglog_slope([r["nu"] for r in rows], [r["sup_dist"] for r in rows])
    dslope = loglog_slope([r["nu"] for r in rows], [r["dissipation"] for r in rows])
    return ConvergenceTable(rows, slope, dslope, meta)


@dataclasses.dataclass
class NormHistory:
    times: np.ndarray
    triple: np.ndarray
    reports: list
    factor: float

    @property
    def initial(self):
        return float(self.triple[0])

    @property
    def max_ratio(self):
        if self.initial == 0:
            return 0.0 if not np.any(self.triple) else math.inf
        return float(self.triple.max() / self.initial)

    @property
    def exceeded(self):
        return self.max_ratio > self.factor


def norm_history(traj: Trajectory, params=None, factor=3.0):
    """Triple norm of every snapshot; flags growth above ``factor`` times the t = 0 value."""
    params = params or NormParams.from_config(traj.config)
    reports = [triple_norm(s, params) for s in traj.snapshots]
    return NormHistory(traj.times, np.array([r.triple for r in reports]), reports, factor)


@dataclasses.dataclass
class GammaResult:
    gamma: float | None
    T: float | None
    tried: list

    @property
    def found(self):
        return self.gamma is not None


def gamma_search(config: RunConfig, datum: VorticityState, gamma_grid, solver_kind="mild", factor=3.0):
    """Smallest gamma whose history stays within ``factor`` of the initial triple norm."""
    grid_vals = [float(g) for g in gamma_grid]
    if any(b <= a for a, b in zip(grid_vals, grid_vals[1:])):
        raise ValueError("gamma_grid must be increasing")
    tried = []
    for g in grid_vals:
        T = 0.45 * config.mu0 / g
        cfg = dataclasses.replace(config, gamma=g, T=T)
        tr = run(cfg, datum, solver_kind)
        if not tr.ok:
            tried.append({"gamma": g, "T": T, "ok": False, "reason": tr.failure})
            continue
        h = norm_history(tr, factor=factor)
        good = not h.exceeded
        tried.append({"gamma": g, "T": float(tr.times[-1]), "ok": good, "max_ratio": h.max_ratio})
        if good:
            return GammaResult(g, float(tr.times[-1]), tried)
    return GammaResult(None, None, tried)
