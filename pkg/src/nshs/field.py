"""Grids, Fourier modes and derivative operators on the half-plane T x [0, Ymax].

The wall-normal direction is discretised with Chebyshev-Gauss-Lobatto nodes in
an auxiliary variable ``s`` in [0, 1], mapped to ``y`` through

    y(s) = Ymax * sinh(beta * s) / sinh(beta),   beta = asinh(Ymax / (c * sqrt(nu)))

so that the nodes cluster at the scale sqrt(nu) near the wall.  All fields are
stored by tangential frequency: ``values[k]`` is the profile for ``xi = k - K``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "YGrid",
    "ModeField",
    "VorticityState",
    "RunConfig",
    "ConfigError",
    "DifferentiationNoiseError",
    "make_grid",
    "weight_w",
    "weight_alt",
    "ddx",
    "conormal_dy",
    "to_physical",
    "from_physical",
    "min_nx",
]

MU0_MAX = 0.1


class ConfigError(ValueError):
    """Raised when run parameters violate an admissibility constraint."""


class DifferentiationNoiseError(RuntimeError):
    """Raised when a field is too rough for the grid's differentiation stencil."""


# ---------------------------------------------------------------------------
# Chebyshev machinery
# ---------------------------------------------------------------------------

def _cheb_nodes(n):
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))


def _cheb_diff(s):
    """Barycentric differentiation matrix on the ascending CGL nodes ``s``."""
    n = len(s)
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    ds = s[:, None] - s[None, :]
    D = np.outer(c, 1.0 / c) / (ds + np.eye(n))
    D -= np.diag(D.sum(axis=1))
    return D


def _clenshaw_curtis(n):
    """Clenshaw-Curtis weights for the CGL nodes on [0, 1]."""
    N = n - 1
    theta = np.pi * np.arange(n) / N
    w = np.zeros(n)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
        v -= np.cos(N * theta[1:-1]) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[1:-1]) / (4 * k**2 - 1)
    w[1:-1] = 2.0 * v / N
    # weights for [-1, 1] -> [0, 1]
    return 0.5 * w


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class YGrid:
    """Mapped Chebyshev grid on [0, Ymax] with quadrature and differentiation."""

    nodes: np.ndarray
    quad_weights: np.ndarray
    nu_hint: float
    s: np.ndarray
    dyds: np.ndarray
    beta: float

    @property
    def n(self):
        return len(self.nodes)

    @property
    def ymax(self):
        return float(self.nodes[-1])

    @cached_property
    def D(self):
        """First-derivative matrix d/dy."""
        return _cheb_diff(self.s) / self.dyds[:, None]

    @cached_property
    def D2(self):
        return self.D @ self.D

    @cached_property
    def _cheb_coeff_matrix(self):
        # values at CGL nodes (ascending s) -> Chebyshev coefficients in x = 2s - 1
        n = self.n
        N = n - 1
        k = np.arange(n)
        theta = np.pi * (N - k) / N  # node k sits at x = -cos(pi k/N) = cos(theta)
        T = np.cos(np.outer(np.arange(n), theta))
        c = np.ones(n)
        c[0] = c[-1] = 2.0
        M = (2.0 / N) * T / c[None, :]
        M /= c[:, None]
        return M

    def cheb_coeffs(self, values):
        """Chebyshev coefficients (in the mapped variable) of nodal values."""
        return self._cheb_coeff_matrix @ values

    def interp(self, values, y):
        """Evaluate the spectral interpolant of nodal ``values`` at points ``y``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        s = np.arcsinh(y * math.sinh(self.beta) / self.ymax) / self.beta
        x = np.clip(2.0 * s - 1.0, -1.0, 1.0)
        coeffs = self.cheb_coeffs(values)
        return np.polynomial.chebyshev.chebval(x, coeffs)

    def partial_weights(self, a, b):
        """Quadrature weights q with q @ f ~ integral of f over [a, b]."""
        return _partial_weights(self, float(a), float(b))

    def y_of_s(self, s):
        return self.ymax * np.sinh(self.beta * s) / math.sinh(self.beta)


_PW_CACHE: dict = {}


def _partial_weights(grid, a, b):
    key = (id(grid), a, b)
    hit = _PW_CACHE.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    a = min(max(a, 0.0), grid.ymax)
    b = min(max(b, 0.0), grid.ymax)
    sa, sb = (np.arcsinh(np.array([a, b]) * math.sinh(grid.beta) / grid.ymax) / grid.beta)
    xa, xb = 2 * sa - 1, 2 * sb - 1
    n = grid.n
    # integral over [xa, xb] of T_k, then chain rule ds = dx/2 and dy = y'(s) ds
    ints = np.empty(n)
    for k in range(n):
        Tk = np.zeros(k + 1)
        Tk[k] = 1.0
        P = np.polynomial.chebyshev.chebint(Tk)
        ints[k] = np.polynomial.chebyshev.chebval(xb, P) - np.polynomial.chebyshev.chebval(xa, P)
    q = 0.5 * (ints @ grid._cheb_coeff_matrix) * grid.dyds
    if len(_PW_CACHE) > 512:
        _PW_CACHE.clear()
    _PW_CACHE[key] = (grid, q)
    return q


def make_grid(n_nodes, ymax=8.0, nu=1e-2, cluster=2.0):
    """Build a wall-clustered grid with at least 8 nodes inside [0, sqrt(nu)].

    The clustering length is ``cluster * sqrt(nu)``; it is halved until the
    boundary layer holds 8 nodes, and a ``ValueError`` is raised if that is
    impossible with ``n_nodes`` points.
    """
    if n_nodes < 32:
        raise ValueError(f"n_nodes={n_nodes} < 32")
    if ymax < 2:
        raise ValueError(f"ymax={ymax} < 2")
    if not nu > 0:
        raise ValueError("nu must be positive")
    s = _cheb_nodes(n_nodes)
    sq = math.sqrt(nu)
    c = cluster
    for _ in range(12):
        beta = math.asinh(ymax / (c * sq))
        y = ymax * np.sinh(beta * s) / math.sinh(beta)
        y[0] = 0.0
        y[-1] = ymax
        if np.count_nonzero(y <= sq) >= 8 and y[1] <= sq / 8:
            break
        c *= 0.5
    else:
        raise ValueError(f"n_nodes={n_nodes} cannot resolve the boundary layer for nu={nu}")
    if np.count_nonzero(y <= sq) < 8:
        raise ValueError(f"n_nodes={n_nodes} cannot resolve the boundary layer for nu={nu}")
    dyds = ymax * beta * np.cosh(beta * s) / math.sinh(beta)
    w = _clenshaw_curtis(n_nodes) * dyds
    w *= ymax / w.sum()
    return YGrid(nodes=y, quad_weights=w, nu_hint=float(nu), s=s, dyds=dyds, beta=beta)


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------

def weight_w(y, nu):
    """Boundary-layer weight: sqrt(nu) below sqrt(nu), y up to 1, then 1."""
    sq = math.sqrt(nu)
    return np.clip(np.asarray(y, dtype=float), sq, 1.0)


def weight_alt(y, nu, C=16.0):
    """Alternative weight min(sqrt(nu) exp(y / (C sqrt(nu))), 1)."""
    sq = math.sqrt(nu)
    arg = np.minimum(np.asarray(y, dtype=float) / (C * sq), 700.0)
    return np.minimum(sq * np.exp(arg), 1.0)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModeField:
    xi: int
    values: np.ndarray
    grid: YGrid

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("ModeField values must be finite")

    def with_values(self, values):
        return ModeField(self.xi, np.asarray(values), self.grid)


@dataclass(frozen=True)
class RunConfig:
    """Physical and numerical parameters of a run."""

    nu: float = 0.05
    mu0: float = 0.1
    gamma: float = 0.25
    eps0: float = 0.05
    alpha: float = 0.25
    theta0: float = 0.25
    K: int = 8
    ny: int = 128
    ymax: float = 8.0
    dt: float = 1e-3
    T: float = 0.1
    picard_nodes: int = 3
    picard_tol: float = 1e-10
    picard_maxiter: int = 20
    n_mu: int = 32
    snapshot_every: int = 10
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.nu > 0:
            raise ConfigError(f"nu={self.nu}: viscosity must be positive")
        if not (0 < self.mu0 <= MU0_MAX):
            raise ConfigError(f"mu0={self.mu0}: the initial radius must satisfy mu0 in (0, 1/10]")
        if not self.gamma > 0:
            raise ConfigError(f"gamma={self.gamma}: radius decay rate must be positive")
        if not (0 < self.eps0 < 1):
            raise ConfigError(f"eps0={self.eps0}: must lie in (0, 1)")
        if not (0 < self.alpha < 0.5):
            raise ConfigError(f"alpha={self.alpha}: time-weight exponent must satisfy alpha in (0, 1/2)")
        if not self.theta0 > 0:
            raise ConfigError(f"theta0={self.theta0}: must be positive")
        if self.K < 0:
            raise ConfigError(f"K={self.K}: must be nonnegative")
        if not self.dt > 0:
            raise ConfigError(f"dt={self.dt}: must be positive")
        if self.T < 0:
            raise ConfigError(f"T={self.T}: must be nonnegative")
        if not self.T < self.mu0 / (2 * self.gamma):
            raise ConfigError(
                f"T={self.T}: must satisfy T < mu0/(2 gamma) = {self.mu0 / (2 * self.gamma):.6g}"
            )

    @property
    def t_max(self):
        return self.mu0 / (2 * self.gamma)


class VorticityState:
    """All Fourier modes xi = -K..K of the vorticity on one grid, at one time.

    ``values`` has shape (2K+1, n) with row ``xi + K``.
    """

    def __init__(self, values, grid, time=0.0, config=None):
        values = np.asarray(values, dtype=complex)
        if values.ndim != 2 or values.shape[1] != grid.n or values.shape[0] % 2 != 1:
            raise ValueError(f"bad state shape {values.shape} for grid of {grid.n} nodes")
        self.values = values
        self.grid = grid
        self.time = float(time)
        self.config = config

    @property
    def K(self):
        return (self.values.shape[0] - 1) // 2

    @property
    def xis(self):
        return np.arange(-self.K, self.K + 1)

    def mode(self, xi):
        return ModeField(int(xi), self.values[xi + self.K], self.grid)

    @property
    def modes(self):
        return [self.mode(xi) for xi in self.xis]

    def replace(self, values=None, time=None):
        return VorticityState(
            self.values if values is None else values,
            self.grid,
            self.time if time is None else time,
            self.config,
        )

    def symmetry_error(self):
        v = self.values
        return float(np.max(np.abs(v - np.conj(v[::-1])), initial=0.0))

    def symmetrize(self):
        v = 0.5 * (self.values + np.conj(self.values[::-1]))
        return self.replace(values=v)

    @classmethod
    def zeros(cls, grid, K, time=0.0, config=None):
        return cls(np.zeros((2 * K + 1, grid.n), dtype=complex), grid, time, config)

    @classmethod
    def from_function(cls, func, grid, K, nx=None, time=0.0, config=None):
        """Sample a real function ``func(x, y)`` and keep modes |xi| <= K."""
        nx = nx or max(4 * K + 4, 16)
        x = 2 * np.pi * np.arange(nx) / nx
        X, Y = np.meshgrid(x, grid.nodes, indexing="ij")
        return from_physical(func(X, Y), grid, K, time=time, config=config)

    def __repr__(self):
        return f"VorticityState(K={self.K}, n={self.grid.n}, time={self.time:g})"


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

def _spectral_noise(grid, values, order):
    # one scale for all rows: modes at round-off level must not look noisy
    a = np.abs(grid.cheb_coeffs(np.atleast_2d(values).T))
    scale = a.max()
    if scale == 0:
        return 0.0
    n = grid.n
    tail = a[-max(3, n // 16):].max()
    return float(tail / scale * n**order)


def ddx(f, i=1):
    """Tangential derivative of order ``i`` (multiplication by (i xi)^i)."""
    if i < 0:
        raise ValueError("order must be nonnegative")
    if isinstance(f, VorticityState):
        fac = (1j * f.xis.astype(float)) ** i
        return f.replace(values=f.values * fac[:, None])
    return f.with_values(f.values * (1j * f.xi) ** i)


def conormal_dy(f, j=1, check=True):
    """Apply the conormal derivative (y d/dy) ``j`` times.

    Accepts a ModeField, a VorticityState or a raw (…, n) array paired with its
    grid via a ModeField.  With ``check`` the Chebyshev tail of the input is
    inspected and ``DifferentiationNoiseError`` is raised when the estimated
    derivative error exceeds 1e-6 relative.
    """
    if j < 0:
        raise ValueError("order must be nonnegative")
    grid = f.grid
    vals = f.values
    if j == 0:
        return f.replace(values=vals.copy()) if isinstance(f, VorticityState) else f.with_values(vals.copy())
    if check and np.any(vals):
        noise = _spectral_noise(grid, vals.reshape(-1, grid.n), j)
        if noise > 1e-6:
            raise DifferentiationNoiseError(
                f"estimated derivative error {noise:.2e} exceeds 1e-6 "
                "(under-resolved, or round-off amplified on a fine grid)"
            )
    yD = grid.nodes[:, None] * grid.D
    out = vals
    for _ in range(j):
        out = out @ yD.T
    out = np.array(out)
    out[..., 0] = 0.0
    if isinstance(f, VorticityState):
        return f.replace(values=out)
    return f.with_values(out)


def dy(f, j=1):
    """Plain wall-normal derivative of order ``j``."""
    out = f.values
    for _ in range(j):
        out = out @ f.grid.D.T
    if isinstance(f, VorticityState):
        return f.replace(values=out)
    return f.with_values(out)


def min_nx(K):
    return 2 * K + 2


def to_physical(state, nx):
    """Real samples on the (nx, n) tensor grid x_j = 2 pi j / nx."""
    K = state.K
    if nx < min_nx(K):
        raise ValueError(f"nx={nx} < 2K+2={min_nx(K)} would alias")
    half = np.zeros((nx // 2 + 1, state.grid.n), dtype=complex)
    half[: K + 1] = state.values[K:]
    return np.fft.irfft(half, n=nx, axis=0) * nx


def from_physical(f, grid, K, time=0.0, config=None):
    """Fourier analysis of real samples (nx, n); keeps |xi| <= K."""
    nx = f.shape[0]
    if nx < min_nx(K):
        raise ValueError(f"nx={nx} < 2K+2={min_nx(K)} would alias")
    half = np.fft.rfft(f, axis=0) / nx
    vals = np.empty((2 * K + 1, grid.n), dtype=complex)
    vals[K:] = half[: K + 1]
    vals[:K] = np.conj(half[1 : K + 1][::-1])
    vals[K] = vals[K].real
    return VorticityState(vals, grid, time, config)
