"""Velocity recovery, the boundary trace and the nonlinearity.

Per frequency the stream function solves

    psi'' - xi^2 psi = omega,   psi(0) = 0,   psi'(Ymax) + |xi| psi(Ymax) = 0,

the last condition being the exact decaying continuation beyond Ymax for
vorticity supported below Ymax.  Then u1 = -psi', u2 = i xi psi; this is the
Dirichlet Green's function representation written as a boundary value
problem.  Because u1 and u2 share the differentiation matrix, the discrete
divergence i xi u1 + d_y u2 vanishes to round-off.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .field import ModeField, VorticityState, YGrid

__all__ = [
    "VelocityState",
    "NonlinearState",
    "stream_function",
    "velocity",
    "velocity_u1",
    "velocity_u2",
    "u2_over_y",
    "trace_operator",
    "compatibility",
    "nonlinearity",
    "dealias_size",
    "energy",
    "enstrophy",
    "CancellationError",
]


class CancellationError(RuntimeError):
    """u2/y near the wall cannot be evaluated to the requested accuracy."""


_SOLVE_CACHE: dict = {}


def _stream_inverse(grid: YGrid, a: int):
    key = (id(grid), a)
    hit = _SOLVE_CACHE.get(key)
    if hit is not None and hit[0] is grid:
        return hit[1]
    n = grid.n
    L = grid.D2 - a * a * np.eye(n)
    L[0] = 0.0
    L[0, 0] = 1.0
    L[-1] = grid.D[-1]
    L[-1, -1] += a
    # rhs rows 0 and n-1 are replaced by the boundary data (zero)
    S = np.eye(n)
    S[0, 0] = S[-1, -1] = 0.0
    inv = np.linalg.solve(L, S)
    if len(_SOLVE_CACHE) > 512:
        _SOLVE_CACHE.clear()
    _SOLVE_CACHE[key] = (grid, inv)
    return inv


def stream_function(omega):
    """psi for a ModeField or for every mode of a VorticityState."""
    if isinstance(omega, ModeField):
        return omega.with_values(_stream_inverse(omega.grid, abs(omega.xi)) @ omega.values)
    out = np.empty_like(omega.values)
    for k, xi in enumerate(omega.xis):
        out[k] = _stream_inverse(omega.grid, abs(int(xi))) @ omega.values[k]
    return omega.replace(values=out)


def velocity_u1(omega: ModeField) -> ModeField:
    psi = stream_function(omega)
    return omega.with_values(-(omega.grid.D @ psi.values))


def velocity_u2(omega: ModeField) -> ModeField:
    if omega.xi == 0:
        return omega.with_values(np.zeros_like(omega.values, dtype=complex))
    psi = stream_function(omega)
    out = 1j * omega.xi * psi.values
    out[0] = 0.0
    return omega.with_values(out)


def u2_over_y(omega: ModeField, check=True) -> ModeField:
    """u2/y with the wall value i xi psi'(0); raises on visible cancellation."""
    if omega.xi == 0:
        return omega.with_values(np.zeros_like(omega.values, dtype=complex))
    grid = omega.grid
    psi = stream_function(omega).values
    y = grid.nodes
    out = np.empty_like(psi, dtype=complex)
    out[1:] = psi[1:] / y[1:]
    dpsi = grid.D @ psi
    out[0] = dpsi[0]
    if check:
        d2 = grid.D @ dpsi
        taylor = dpsi[0] + 0.5 * d2[0] * y[1]
        scale = max(np.abs(out).max(), 1e-300)
        err = abs(out[1] - taylor) / scale
        # the remainder is O(y1^2 psi''') which is far below 1e-6 on valid grids
        if err > 1e-6:
            raise CancellationError(f"u2/y near the wall inconsistent at level {err:.1e}")
    return omega.with_values(1j * omega.xi * out)


def trace_operator(n: ModeField):
    """-int_0^Ymax e^{-|xi| z} n(z) dz by grid quadrature."""
    w = n.grid.quad_weights * np.exp(-abs(n.xi) * n.grid.nodes)
    return complex(-(w @ n.values))


def _exp_weights(grid, xis):
    return grid.quad_weights[None, :] * np.exp(-np.abs(xis)[:, None] * grid.nodes[None, :])


def compatibility(state: VorticityState):
    """c_xi = int e^{-|xi| z} omega_xi dz for every mode (equals u1_xi(0))."""
    return np.einsum("kn,kn->k", _exp_weights(state.grid, state.xis), state.values)


@dataclass(frozen=True, eq=False)
class VelocityState:
    u1: np.ndarray
    u2: np.ndarray
    grid: YGrid
    time: float

    @property
    def K(self):
        return (self.u1.shape[0] - 1) // 2

    @property
    def u1_modes(self):
        return [ModeField(int(xi), self.u1[xi + self.K], self.grid) for xi in range(-self.K, self.K + 1)]

    @property
    def u2_modes(self):
        return [ModeField(int(xi), self.u2[xi + self.K], self.grid) for xi in range(-self.K, self.K + 1)]

    def divergence(self):
        xis = np.arange(-self.K, self.K + 1)
        return 1j * xis[:, None] * self.u1 + self.u2 @ self.grid.D.T


@dataclass(frozen=True, eq=False)
class NonlinearState:
    n_values: np.ndarray
    b_values: np.ndarray
    grid: YGrid

    @property
    def K(self):
        return (self.n_values.shape[0] - 1) // 2

    @property
    def n_modes(self):
        return [ModeField(int(xi), self.n_values[xi + self.K], self.grid) for xi in range(-self.K, self.K + 1)]


def velocity(state: VorticityState) -> VelocityState:
    psi = stream_function(state).values
    xis = state.xis
    u1 = -(psi @ state.grid.D.T)
    u2 = 1j * xis[:, None] * psi
    u2[:, 0] = 0.0
    return VelocityState(u1, u2, state.grid, state.time)


def dealias_size(K):
    """Even number of x-points satisfying the 3/2 rule (>= 3K + 1)."""
    m = 3 * K + 1
    return m + (m % 2)


def _to_phys(vals, K, M):
    half = np.zeros((M // 2 + 1, vals.shape[1]), dtype=complex)
    half[: K + 1] = vals[K:]
    return np.fft.irfft(half, n=M, axis=0) * M


def _from_phys(f, K):
    M = f.shape[0]
    half = np.fft.rfft(f, axis=0) / M
    out = np.empty((2 * K + 1, f.shape[1]), dtype=complex)
    out[K:] = half[: K + 1]
    out[:K] = np.conj(half[1 : K + 1][::-1])
    out[K] = out[K].real
    return out


def nonlinearity(omega: VorticityState, vel: VelocityState | None = None) -> NonlinearState:
    """N = -(u1 d_x w + (u2/y)(y d_y w)) with 3/2 dealiasing; B = int e^{-|xi|z} N."""
    grid = omega.grid
    K = omega.K
    xis = omega.xis
    if vel is None:
        vel = velocity(omega)
    w = omega.values
    wx = 1j * xis[:, None] * w
    y = grid.nodes
    ywy = (w @ grid.D.T) * y[None, :]
    u2y = np.empty_like(vel.u2)
    u2y[:, 1:] = vel.u2[:, 1:] / y[None, 1:]
    # wall value of u2/y is i xi psi'(0) = -i xi u1(0)
    u2y[:, 0] = -1j * xis * vel.u1[:, 0]
    M = dealias_size(K)
    prod = _to_phys(vel.u1, K, M) * _to_phys(wx, K, M) + _to_phys(u2y, K, M) * _to_phys(ywy, K, M)
    N = -_from_phys(prod, K)
    B = np.einsum("kn,kn->k", _exp_weights(grid, xis), N)
    return NonlinearState(N, B, grid)


def energy(state: VorticityState, vel: VelocityState | None = None):
    """Kinetic energy 1/2 ||u||^2 over T x [0, Ymax] (includes the 2 pi)."""
    if vel is None:
        vel = velocity(state)
    w = state.grid.quad_weights
    return float(np.pi * (np.abs(vel.u1) ** 2 + np.abs(vel.u2) ** 2).sum(axis=0) @ w)


def enstrophy(state: VorticityState):
    """1/2 ||omega||^2 over T x [0, Ymax]."""
    return float(np.pi * (np.abs(state.values) ** 2).sum(axis=0) @ state.grid.quad_weights)
