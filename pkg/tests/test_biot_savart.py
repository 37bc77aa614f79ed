import math

import numpy as np
import pytest
from scipy.integrate import quad

from nshs.biot_savart import (
    compatibility,
    dealias_size,
    energy,
    enstrophy,
    nonlinearity,
    stream_function,
    trace_operator,
    u2_over_y,
    velocity,
)
from nshs.field import ModeField, VorticityState, make_grid, to_physical


def _profile(y):
    return y * np.exp(-((y - 1.0) ** 2))


def _psi_oracle(y, a):
    # Dirichlet Green's function of d^2 - a^2 on the half-line
    def G(z):
        return -(math.exp(-a * abs(y - z)) - math.exp(-a * (y + z))) / (2 * a)

    return quad(lambda z: G(z) * float(_profile(z)), 0, 12, points=[y], limit=200)[0]


@pytest.mark.parametrize("xi", [1, 3])
def test_stream_function_against_green_quadrature(grid, xi):
    f = ModeField(xi, _profile(grid.nodes) + 0j, grid)
    psi = stream_function(f).values
    for yq in (0.3, 1.0, 2.5):
        ref = _psi_oracle(yq, xi)
        assert abs(grid.interp(psi.real, [yq])[0] - ref) < 1e-8


def test_wall_velocity_is_compatibility(bump):
    vel = velocity(bump)
    assert np.abs(vel.u1[:, 0] - compatibility(bump)).max() < 1e-10
    assert np.all(vel.u2[:, 0] == 0)


def test_divergence_and_curl(bump):
    vel = velocity(bump)
    scale = np.abs(vel.u1).max()
    assert np.abs(vel.divergence()).max() <= 1e-8 * scale
    xis = bump.xis[:, None]
    curl = 1j * xis * vel.u2 - vel.u1 @ bump.grid.D.T
    assert np.abs(curl - bump.values).max() <= 1e-6 * np.abs(bump.values).max()


def test_u2_over_y_wall_value(grid):
    f = ModeField(2, _profile(grid.nodes) + 0j, grid)
    q = u2_over_y(f).values
    psi = stream_function(f).values
    assert q[0] == pytest.approx(2j * (grid.D @ psi)[0])
    assert np.abs(q[1:] * grid.nodes[1:] - 2j * psi[1:]).max() < 1e-14


def test_trace_operator_sign(grid):
    f = ModeField(1, np.exp(-grid.nodes) + 0j, grid)
    # -int e^{-2z} dz over [0, 8]
    assert trace_operator(f) == pytest.approx(-(1 - math.exp(-16)) / 2, abs=1e-10)


def test_energy_and_enstrophy_physical(bump):
    nx = 32
    vel = velocity(bump)
    u1 = to_physical(VorticityState(vel.u1, bump.grid), nx)
    u2 = to_physical(VorticityState(vel.u2, bump.grid), nx)
    w = to_physical(bump, nx)
    dx = 2 * np.pi / nx
    e_ref = 0.5 * dx * ((u1**2 + u2**2).sum(axis=0) @ bump.grid.quad_weights)
    z_ref = 0.5 * dx * ((w**2).sum(axis=0) @ bump.grid.quad_weights)
    assert energy(bump) == pytest.approx(e_ref, rel=1e-12)
    assert enstrophy(bump) == pytest.approx(z_ref, rel=1e-12)


def test_nonlinearity_physical_oracle():
    g = make_grid(96, 8.0, 0.05)
    K = 3
    st = VorticityState.from_function(
        lambda x, y: (np.sin(x) + 0.5 * np.cos(2 * x + 0.3)) * y**2 * np.exp(-(y**2)), g, K)
    nl = nonlinearity(st)
    # full product on a fine grid, then truncated to |xi| <= K
    vel = velocity(st)
    nx = 64
    xis = st.xis[:, None]
    u1 = to_physical(VorticityState(vel.u1, g), nx)
    u2 = to_physical(VorticityState(vel.u2, g), nx)
    wx = to_physical(st.replace(values=1j * xis * st.values), nx)
    wy = to_physical(st.replace(values=st.values @ g.D.T), nx)
    prod = -(u1 * wx + u2 * wy)
    half = np.fft.rfft(prod, axis=0) / nx
    assert np.abs(nl.n_values[K:] - half[: K + 1]).max() < 1e-10
    B = (g.quad_weights * np.exp(-np.abs(st.xis)[:, None] * g.nodes)) @ nl.n_values.T
    assert np.abs(np.diag(B) - nl.b_values).max() < 1e-14


def test_dealias_size():
    assert dealias_size(8) == 26
    assert dealias_size(3) % 2 == 0 and dealias_size(3) >= 10
