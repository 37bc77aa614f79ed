"""Analytic and Sobolev norms of a vorticity state.

X and Y norms are evaluated on the real slice y in [0, 1 + mu].  Each
derivative field d_x^i (y d_y)^j w is first interpolated spectrally onto a
fixed fine point set covering [0, 1 + mu0]; sup and L^1 integral are then
taken of the piecewise-linear interpolant of the (nonnegative) integrand.
Because the point set does not depend on mu, the per-(i,j) parts are exactly
nondecreasing in mu.

An optional continuation mode evaluates the fields at complex y inside
Omega_mu through a low-degree polynomial interpolant on [0, 1 + mu0]; it is an
approximation (see ``continuation_values``).
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .field import RunConfig, VorticityState, conormal_dy, ddx, weight_w

__all__ = [
    "NormReport",
    "MuSchedule",
    "NormParams",
    "mu_schedule",
    "mu_grid",
    "weighted_linf",
    "x_mu_norm",
    "x_t_norm",
    "y_mu_norm",
    "y_t_norm",
    "s_norm",
    "s_mu_norm",
    "z_norm",
    "triple_norm",
    "conormal_parts",
    "DERIV_PAIRS",
    "REPORT_SCHEMA",
    "REPORT_VERSION",
]

DERIV_PAIRS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
REPORT_SCHEMA = "nshs.norm_report"
REPORT_VERSION = 1


@dataclass(frozen=True)
class NormParams:
    nu: float
    mu0: float = 0.1
    gamma: float = 0.25
    eps0: float = 0.05
    alpha: float = 0.25
    n_mu: int = 32

    @classmethod
    def from_config(cls, cfg: RunConfig):
        return cls(cfg.nu, cfg.mu0, cfg.gamma, cfg.eps0, cfg.alpha, cfg.n_mu)


def _params(state, params):
    if params is not None:
        return params
    if state.config is not None:
        return NormParams.from_config(state.config)
    return NormParams(nu=state.grid.nu_hint)


# ---------------------------------------------------------------------------
# mu schedule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MuSchedule:
    mu: float
    mu1: float
    mu2: float


def mu_schedule(mu, mu0, gamma, s):
    """The intermediate radii mu1 = mu + gap/4, mu2 = mu + gap/2."""
    gap = mu0 - mu - gamma * s
    if not (mu > 0 and gap > 0):
        raise ValueError(f"need 0 < mu < mu0 - gamma s (mu={mu}, mu0 - gamma s={mu0 - gamma * s})")
    return MuSchedule(mu, mu + 0.25 * gap, mu + 0.5 * gap)


def mu_grid(mu_max, n=32, min_gap=1e-3):
    """mu = 0 plus points geometric toward mu_max (gaps mu_max .. min_gap mu_max)."""
    if not mu_max > 0:
        raise ValueError("mu_max must be positive")
    gaps = mu_max * np.logspace(0.0, math.log10(min_gap), n)
    return mu_max - gaps


# ---------------------------------------------------------------------------
# sampling on the real slice
# ---------------------------------------------------------------------------

_SAMPLER_CACHE: dict = {}


def _sampler(grid, top):
    """Fine points on [0, top] and the matrix interpolating nodal values there."""
    key = (id(grid), round(top, 12))
    hit = _SAMPLER_CACHE.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1], hit[2]
    y = grid.nodes
    pts = np.union1d(y[y <= top], np.linspace(0.0, top, int(round(top / 5e-4)) + 1))
    s = np.arcsinh(pts * math.sinh(grid.beta) / grid.ymax) / grid.beta
    x = np.clip(2 * s - 1, -1, 1)
    T = np.cos(np.outer(np.arccos(x), np.arange(grid.n)))
    M = T @ grid._cheb_coeff_matrix
    # reproduce nodal values exactly where points are nodes
    idx = np.searchsorted(y, pts)
    hitnode = (idx < grid.n) & (np.abs(y[np.minimum(idx, grid.n - 1)] - pts) < 1e-15)
    M[hitnode] = 0.0
    M[np.where(hitnode)[0], idx[hitnode]] = 1.0
    if len(_SAMPLER_CACHE) > 64:
        _SAMPLER_CACHE.clear()
    _SAMPLER_CACHE[key] = (grid, pts, M)
    return pts, M


def _pl_sup(pts, h, b):
    """sup over [0, b] of the piecewise-linear interpolant of h (..., P)."""
    k = np.searchsorted(pts, b, side="right")
    m = h[..., :k].max(axis=-1)
    if k < len(pts) and pts[k - 1] < b:
        lam = (b - pts[k - 1]) / (pts[k] - pts[k - 1])
        m = np.maximum(m, (1 - lam) * h[..., k - 1] + lam * h[..., k])
    return m


def _pl_int(pts, h, b):
    """Integral over [0, b] of the piecewise-linear interpolant of h."""
    k = np.searchsorted(pts, b, side="right")
    dx = np.diff(pts[:k])
    total = (0.5 * (h[..., : k - 1] + h[..., 1:k]) * dx).sum(axis=-1)
    if k < len(pts) and pts[k - 1] < b:
        d = b - pts[k - 1]
        lam = d / (pts[k] - pts[k - 1])
        hb = (1 - lam) * h[..., k - 1] + lam * h[..., k]
        total = total + 0.5 * (h[..., k - 1] + hb) * d
    return total


def conormal_parts(state: VorticityState, pairs=DERIV_PAIRS, check=True):
    """Array (len(pairs), 2K+1, n) of d_x^i (y d_y)^j w."""
    out = []
    cache = {}
    for i, j in pairs:
        if j not in cache:
            cache[j] = conormal_dy(state, j, check=check)
        out.append(ddx(cache[j], i).values)
    return np.array(out)


def _sampled_parts(state, params, pairs=DERIV_PAIRS, check=True):
    top = 1.0 + params.mu0
    pts, M = _sampler(state.grid, top)
    parts = conormal_parts(state, pairs, check)
    return pts, np.abs(parts @ M.T)


def _xy_tables(state, params, mus, pairs=DERIV_PAIRS, check=True):
    """X and Y parts for each mu: arrays (len(mus), len(pairs))."""
    pts, absf = _sampled_parts(state, params, pairs, check)
    xis = np.abs(state.xis).astype(float)
    w = weight_w(pts, params.nu)
    X = np.zeros((len(mus), len(pairs)))
    Y = np.zeros((len(mus), len(pairs)))
    for m, mu in enumerate(mus):
        b = 1.0 + mu
        ex = np.exp(params.eps0 * np.clip(b - pts, 0.0, None)[None, :] * xis[:, None])
        hx = absf * (w * ex)[None]
        hy = absf * ex[None]
        X[m] = _pl_sup(pts, hx, b).sum(axis=-1)
        Y[m] = _pl_int(pts, hy, b).sum(axis=-1)
    return X, Y


# ---------------------------------------------------------------------------
# public norms
# ---------------------------------------------------------------------------

def weighted_linf(f, mu, nu):
    """sup over y in [0, 1 + mu] of w(y) |f(y)| (ModeField input)."""
    pts, M = _sampler(f.grid, 1.0 + mu)
    h = weight_w(pts, nu) * np.abs(M @ f.values)
    return float(_pl_sup(pts, h, 1.0 + mu))


def _gap(state, params, mu):
    gap = params.mu0 - mu - params.gamma * state.time
    if not gap > 0:
        raise ValueError(
            f"mu={mu} must satisfy mu < mu0 - gamma t = {params.mu0 - params.gamma * state.time:.6g}"
        )
    return gap


def _combine(parts, gap, power):
    low = parts[..., :3].sum(axis=-1)
    high = parts[..., 3:].sum(axis=-1)
    return low + gap**power * high


def x_mu_norm(state, mu, params=None, check=True):
    """X_mu value and the per-(i,j) parts {(i,j): value}."""
    p = _params(state, params)
    gap = _gap(state, p, mu)
    X, _ = _xy_tables(state, p, [mu], check=check)
    parts = dict(zip(DERIV_PAIRS, X[0].tolist()))
    return float(_combine(X[0], gap, 0.5 + p.alpha)), parts


def y_mu_norm(state, mu, params=None, check=True):
    p = _params(state, params)
    gap = _gap(state, p, mu)
    _, Y = _xy_tables(state, p, [mu], check=check)
    parts = dict(zip(DERIV_PAIRS, Y[0].tolist()))
    return float(_combine(Y[0], gap, p.alpha)), parts


def _sweep(state, p, check=True):
    mu_max = p.mu0 - p.gamma * state.time
    if not mu_max > 0:
        raise ValueError(f"t={state.time} outside the admissible window t < mu0/gamma")
    mus = mu_grid(mu_max, p.n_mu)
    X, Y = _xy_tables(state, p, mus, check=check)
    gaps = mu_max - mus
    xt = X[:, :3].sum(1) + gaps ** (0.5 + p.alpha) * X[:, 3:].sum(1)
    yt = Y[:, :3].sum(1) + gaps**p.alpha * Y[:, 3:].sum(1)
    return mu_max, mus, X, Y, xt, yt


def x_t_norm(state, params=None, check=True):
    """sup over the mu-grid of the X combination; returns (value, argmax mu)."""
    p = _params(state, params)
    _, mus, _, _, xt, _ = _sweep(state, p, check)
    k = int(np.argmax(xt))
    return float(xt[k]), float(mus[k])


def y_t_norm(state, params=None, check=True):
    p = _params(state, params)
    _, mus, _, _, _, yt = _sweep(state, p, check)
    k = int(np.argmax(yt))
    return float(yt[k]), float(mus[k])


def _tail_warn(grid, vals, total):
    y = grid.nodes
    edge = np.abs(y[None, -1] * vals[..., -1]) ** 2
    if total > 0 and float(np.max(edge)) > 1e-8 * total:
        warnings.warn("field not decayed at Ymax; truncated tail may exceed 1e-8 of the norm", RuntimeWarning)


def _weighted_l2_sq(state_vals, grid, a):
    q = grid.partial_weights(a, grid.ymax)
    y = grid.nodes
    return (np.abs(state_vals * y) ** 2) @ q


def s_norm(state):
    """(sum_xi int_{y >= 1/2} |y w_xi|^2)^(1/2)."""
    sq = float(np.sum(_weighted_l2_sq(state.values, state.grid, 0.5)))
    val = math.sqrt(max(sq, 0.0))
    _tail_warn(state.grid, state.values, sq)
    return val


def s_mu_norm(state, mu):
    """sum_xi (int_{y >= 1 + mu} |y w_xi|^2)^(1/2)."""
    per = _weighted_l2_sq(state.values, state.grid, 1.0 + mu)
    return float(np.sum(np.sqrt(np.clip(per, 0.0, None))))


def z_norm(state, order=3):
    """sum over i + j <= order of || d_x^i d_y^j w ||_S (plain d_y)."""
    total = 0.0
    dyv = state.values
    D = state.grid.D
    for j in range(order + 1):
        sj = state.replace(values=dyv)
        for i in range(order + 1 - j):
            total += s_norm(ddx(sj, i))
        dyv = dyv @ D.T
    return total


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class NormReport:
    time: float
    x_t: float
    y_t: float
    z: float
    triple: float
    mu_max: float
    per_mu: list = field(default_factory=list)

    def to_dict(self):
        return {
            "schema": REPORT_SCHEMA,
            "version": REPORT_VERSION,
            "time": self.time,
            "x_t": self.x_t,
            "y_t": self.y_t,
            "z": self.z,
            "triple": self.triple,
            "mu_max": self.mu_max,
            "per_mu": self.per_mu,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        if d.get("schema") != REPORT_SCHEMA:
            raise ValueError("not a norm report")
        if d.get("version") != REPORT_VERSION:
            raise ValueError(f"unsupported norm report version {d.get('version')}")
        return cls(d["time"], d["x_t"], d["y_t"], d["z"], d["triple"], d["mu_max"], d["per_mu"])

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _key(ij):
    return f"{ij[0]}{ij[1]}"


def triple_norm(state, params=None, check=True):
    """X(t) + Y(t) + Z with the full mu sweep."""
    p = _params(state, params)
    mu_max, mus, X, Y, xt, yt = _sweep(state, p, check)
    z = z_norm(state)
    per = []
    for m, mu in enumerate(mus):
        per.append(
            {
                "mu": float(mu),
                "x_parts": {_key(ij): float(v) for ij, v in zip(DERIV_PAIRS, X[m])},
                "y_parts": {_key(ij): float(v) for ij, v in zip(DERIV_PAIRS, Y[m])},
                "x_total": float(xt[m]),
                "y_total": float(yt[m]),
            }
        )
    x_t = float(xt.max())
    y_t = float(yt.max())
    return NormReport(state.time, x_t, y_t, z, x_t + y_t + z, float(mu_max), per)


# ---------------------------------------------------------------------------
# continuation mode
# ---------------------------------------------------------------------------

def continuation_values(f, y, top=1.1, degree=24):
    """Evaluate a ModeField at complex points via a degree-``degree``
    Chebyshev interpolant on [0, top].

    This is an approximation: the interpolant of the real samples is assumed
    to represent the analytic continuation inside Omega_mu.
    """
    grid = f.grid
    k = np.arange(degree + 1)
    cheb = 0.5 * top * (1 - np.cos(np.pi * k / degree))
    vals = grid.interp(f.values.real, cheb) + 1j * grid.interp(f.values.imag, cheb)
    # barycentric weights of Chebyshev-Lobatto points
    wb = (-1.0) ** k
    wb[0] *= 0.5
    wb[-1] *= 0.5
    y = np.asarray(y, dtype=complex)
    d = y[..., None] - cheb
    exact = np.isclose(d, 0, atol=1e-14)
    d = np.where(exact, 1.0, d)
    q = wb / d
    out = (q @ vals) / q.sum(axis=-1)
    hit = exact.any(axis=-1)
    if np.any(hit):
        out = np.where(hit, vals[np.argmax(exact, axis=-1)], out)
    return out


def omega_mu_points(mu, n_re=221, n_im=9):
    """Sample points of the closed domain Omega_mu."""
    re = np.linspace(0.0, 1.0 + mu, n_re)
    half = np.where(re <= 1.0, mu * re, 1.0 + mu - re)
    frac = np.linspace(-1.0, 1.0, n_im)
    return (re[:, None] + 1j * half[:, None] * frac[None, :]).ravel()


def weighted_linf_complex(f, mu, nu, eps0=0.0, top=1.1):
    """sup over Omega_mu of w(Re y) e^{eps0 (1+mu-Re y)_+ |xi|} |f(y)|."""
    y = omega_mu_points(mu)
    vals = np.abs(continuation_values(f, y, top))
    ex = np.exp(eps0 * np.clip(1 + mu - y.real, 0, None) * abs(f.xi))
    return float(np.max(weight_w(y.real, nu) * ex * vals))


def l1_contour(f, mu, eps0=0.0, top=1.1, n_theta=8, n_pts=400):
    """sup over theta < mu of half the L^1 norm on the boundary of Omega_theta.

    The factor 1/2 makes theta = 0 reduce to the real segment [0, 1].
    """
    best = 0.0
    for th in np.linspace(0.0, mu, n_theta, endpoint=False):
        r = np.linspace(0.0, 1.0 + th, n_pts)
        im = np.where(r <= 1.0, th * r, 1.0 + th - r)
        speed = np.where(r <= 1.0, math.sqrt(1 + th * th), math.sqrt(2.0))
        ex = np.exp(eps0 * np.clip(1 + mu - r, 0, None) * abs(f.xi))
        tot = 0.0
        for sgn in (1.0, -1.0):
            v = np.abs(continuation_values(f, r + 1j * sgn * im, top))
            tot += trapezoid(v * ex * speed, r)
        best = max(best, 0.5 * tot)
    return best
