"""Heat kernels and the numerically constructed Stokes Green's function.

For one tangential frequency xi the vorticity obeys

    d_t w = nu (d_y^2 - xi^2) w + N,     nu (d_y + |xi|) w |_{y=0} = B,

and on the truncated domain we close the top with (d_y + |xi|) w = 0 at Ymax,
which keeps ``int e^{-|xi| z} w dz`` exactly balanced by the boundary flux.

``ModeOperator`` eliminates the two boundary nodes of the Chebyshev
collocation and diagonalises the resulting interior matrix.  Everything else
(kernels, the mild solver) is built from its eigen-decomposition.

The Green's function is assembled as G = Htilde + R where the Neumann heat
kernel Htilde is known in closed form and R is obtained numerically from the
boundary value problem it solves:

    d_t R = nu (d_y^2 - xi^2) R,   R(0) = 0,
    nu (d_y + |xi|) R |_{y=0} = -nu |xi| Htilde(t, 0, z).

R is smooth, so its collocation is accurate pointwise; the identity
(d_y - d_z) R = 0 is *not* built in and serves as a check.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .field import ModeField, YGrid

__all__ = [
    "KernelMatrix",
    "KernelError",
    "ModeOperator",
    "mode_operator",
    "heat_H",
    "heat_Htilde",
    "htilde_matrix",
    "green_numeric",
    "residual_R",
    "yz_residual",
    "derivative_entries",
    "apply_kernel",
    "boundary_column",
    "envelope",
    "fit_envelope",
    "write_kernel",
    "read_kernel",
    "KERNEL_KINDS",
]

KERNEL_KINDS = ("H", "Htilde", "G_numeric", "R")
_SQRT_4PI = 2.0 * math.sqrt(math.pi)


class KernelError(RuntimeError):
    """Kernel construction or invariant failure."""


# ---------------------------------------------------------------------------
# closed-form heat kernels
# ---------------------------------------------------------------------------

def heat_H(xi, t, y, z, nu):
    """Free heat kernel exp(-(y-z)^2/4 nu t) exp(-nu xi^2 t) / sqrt(nu t).

    Note the normalisation: this is 2 sqrt(pi) times the probability density.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    nt = nu * t
    return np.exp(-((y - z) ** 2) / (4 * nt) - nu * xi * xi * t) / math.sqrt(nt)


def heat_Htilde(xi, t, y, z, nu):
    """Neumann half-line heat kernel (image sum), same normalisation as heat_H."""
    if not t > 0:
        raise ValueError("t must be positive")
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    nt = nu * t
    g = np.exp(-((y - z) ** 2) / (4 * nt)) + np.exp(-((y + z) ** 2) / (4 * nt))
    return g * math.exp(-nu * xi * xi * t) / math.sqrt(nt)


def _htilde_phys(xi, t, y, z, nu):
    # unit-mass version used inside the Green's function
    return heat_Htilde(xi, t, y, z, nu) / _SQRT_4PI


# ---------------------------------------------------------------------------
# per-frequency operator
# ---------------------------------------------------------------------------

class ModeOperator:
    """Eliminated Robin heat operator for one frequency on one grid.

    Interior unknowns ``w_I = w[1:-1]``; boundary values are recovered as
    ``w[[0, -1]] = P w_I + q B``.  Then ``d_t w_I = A w_I + bvec B + N_I``.
    """

    def __init__(self, grid: YGrid, xi: int, nu: float):
        self.grid = grid
        self.xi = int(xi)
        self.nu = float(nu)
        n = grid.n
        a = abs(self.xi)
        D, D2 = grid.D, grid.D2
        I = np.arange(1, n - 1)
        b = np.array([0, n - 1])
        M = np.zeros((2, n))
        M[0] = D[0]
        M[0, 0] += a
        M[1] = D[-1]
        M[1, -1] += a
        Minv = np.linalg.inv(M[:, b])
        P = -Minv @ M[:, I]
        q = Minv[:, 0] / nu
        self.A = nu * (D2[np.ix_(I, I)] + D2[np.ix_(I, b)] @ P - a * a * np.eye(n - 2))
        self.bvec = nu * D2[np.ix_(I, b)] @ q
        E = np.zeros((n, n - 2))
        E[I, np.arange(n - 2)] = 1.0
        E[b] = P
        self.E = E
        qfull = np.zeros(n)
        qfull[b] = q
        self.qvec = qfull
        lam, V = np.linalg.eig(self.A)
        if np.max(np.abs(lam.imag), initial=0.0) > 1e-8 * max(1.0, np.abs(lam).max()):
            raise KernelError(f"xi={xi}: complex spectrum, grid unsuitable")
        self.lam = lam.real
        self.V = V.real
        cond = np.linalg.cond(self.V)
        if not np.isfinite(cond) or cond > 1e8:
            raise KernelError(f"xi={xi}: eigenbasis condition {cond:.1e} too large")
        self.Vinv = np.linalg.inv(self.V)
        self.EV = self.E @ self.V
        self.cb = self.Vinv @ self.bvec
        self._prop_cache: dict = {}

    @property
    def n(self):
        return self.grid.n

    def to_eig(self, w):
        """Eigen-coordinates of the interior part of nodal values (..., n)."""
        return np.asarray(w)[..., 1:-1] @ self.Vinv.T

    def from_eig(self, c, B=0.0):
        """Nodal values from eigen-coordinates, adding the algebraic B term."""
        out = c @ self.EV.T
        if np.any(B):
            out = out + np.multiply.outer(B, self.qvec)
        return out

    def propagator(self, t):
        """Full-grid matrix of the semigroup: (n, n), boundary columns zero."""
        key = float(t)
        hit = self._prop_cache.get(key)
        if hit is not None:
            return hit
        Pm = (self.EV * np.exp(self.lam * t)) @ self.Vinv
        out = np.zeros((self.n, self.n))
        out[:, 1:-1] = Pm
        if len(self._prop_cache) > 64:
            self._prop_cache.clear()
        self._prop_cache[key] = out
        return out

    def flux_response(self, t):
        """Solution at time t for a unit impulse of B at time 0."""
        return self.EV @ (np.exp(self.lam * t) * self.cb)


_OP_CACHE: dict = {}


def mode_operator(grid, xi, nu):
    """Cached ModeOperator keyed by (grid identity, xi, nu)."""
    key = (id(grid), int(xi), float(nu))
    hit = _OP_CACHE.get(key)
    if hit is not None and hit.grid is grid:
        return hit
    if len(_OP_CACHE) > 256:
        _OP_CACHE.clear()
    op = ModeOperator(grid, xi, nu)
    _OP_CACHE[key] = op
    return op


# ---------------------------------------------------------------------------
# KernelMatrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Pointwise kernel values on the grid tensor plus a quadrature operator.

    ``entries[i, j]`` approximates K(t, y_i, z_j) (column 0 is z = 0).
    ``operator`` maps nodal values f to nodal values of int K f dz; for the
    closed-form kinds it is ``entries * quad_weights``, for the numerical
    Green's function it is the collocation semigroup.
    """

    xi: int
    t: float
    nu: float
    entries: np.ndarray
    kind: str
    grid: YGrid
    operator: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.t > 0:
            raise ValueError("t must be positive")
        if not np.all(np.isfinite(self.entries)):
            raise KernelError("kernel entries must be finite")
        self.entries.setflags(write=False)
        if self.operator is None:
            object.__setattr__(self, "operator", self.entries * self.grid.quad_weights[None, :])

    @property
    def b(self):
        return abs(self.xi) + 1.0 / math.sqrt(self.nu)


def htilde_matrix(xi, t, nu, grid, kind="Htilde"):
    """Closed-form kernel on the grid tensor (kind 'H' or 'Htilde')."""
    y = grid.nodes
    f = heat_Htilde if kind == "Htilde" else heat_H
    ent = f(xi, t, y[:, None], y[None, :], nu)
    return KernelMatrix(int(xi), float(t), float(nu), ent, kind, grid)


# composite Gauss-Legendre rules on geometric panels
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _geometric_rule(length, rmin, ratio=1.25):
    edges = [length]
    while edges[-1] > rmin * length:
        edges.append(edges[-1] / ratio)
    edges = np.r_[0.0, np.array(edges[::-1])]
    lo, hi = edges[:-1], edges[1:]
    x = (0.5 * (hi - lo)[:, None] * (_GL_X + 1) + lo[:, None]).ravel()
    w = (0.5 * (hi - lo)[:, None] * _GL_W).ravel()
    return x, w


def _residual_numeric(op: ModeOperator, t):
    """R(t, y_i, z_j) from its boundary value problem, integrated exactly in y
    (eigenbasis) and by graded quadrature in time."""
    nu, a, xi = op.nu, abs(op.xi), op.xi
    z = op.grid.nodes
    n = op.n
    if a == 0:
        return np.zeros((n, n))
    # u = t - s: near u = 0 the fast modes need geometric grading
    ub, wb = _geometric_rule(0.5 * t, 1e-13)
    sb = t - ub
    # s in [0, t/2] via s = sigma^2 (removes s^{-1/2} at z = 0)
    sg, ws = _geometric_rule(math.sqrt(0.5 * t), 1e-8)
    sa = sg * sg
    wa = 2.0 * ws * sg
    u = np.r_[ub, t - sa]
    s = np.r_[sb, sa]
    w = np.r_[wb, wa]

    def forcing(sv):
        sv = np.asarray(sv)[:, None]
        return -nu * a * 2.0 * np.exp(-z[None, :] ** 2 / (4 * nu * sv) - nu * xi * xi * sv) / np.sqrt(
            4 * np.pi * nu * sv
        )

    J = np.exp(np.outer(op.lam, u)) @ (w[:, None] * forcing(s))
    R = op.EV @ (op.cb[:, None] * J)
    R += np.outer(op.qvec, forcing([t])[0])
    return R


def green_numeric(xi, t, nu, grid):
    """Green's function of the Robin problem at time t on ``grid``."""
    if not t > 0:
        raise ValueError("t must be positive")
    op = mode_operator(grid, xi, nu)
    y = grid.nodes
    H = _htilde_phys(xi, t, y[:, None], y[None, :], nu)
    R = _residual_numeric(op, t)
    ent = H + R
    if not np.all(np.isfinite(ent)):
        raise KernelError("non-finite kernel")
    if xi == 0 and ent.min() < -1e-8 * max(1.0, ent.max()):
        raise KernelError(f"positivity violated: min {ent.min():.3e}")
    return KernelMatrix(int(xi), float(t), float(nu), ent, "G_numeric", grid, op.propagator(t))


def residual_R(g: KernelMatrix, htilde: KernelMatrix, tol=1e-4, check=True):
    """R = G - Htilde with the function-of-(y+z) check on interior nodes.

    ``htilde`` may use the closed-form normalisation of heat_Htilde; it is
    rescaled to unit mass before subtraction.
    """
    if (g.xi, g.t, g.nu) != (htilde.xi, htilde.t, htilde.nu) or g.grid is not htilde.grid:
        raise ValueError("kernels do not match")
    h = htilde.entries
    hop = htilde.operator
    if htilde.kind in ("Htilde", "H") and g.kind == "G_numeric":
        h = h / _SQRT_4PI
        hop = hop / _SQRT_4PI
    R = KernelMatrix(g.xi, g.t, g.nu, g.entries - h, "R", g.grid, g.operator - hop)
    if check:
        res = yz_residual(R)
        if res > tol:
            raise KernelError(f"(d_y - d_z) R residual {res:.2e} exceeds {tol:g} of max|R|")
    return R


def yz_residual(R: KernelMatrix):
    """max |(d_y - d_z) R| on interior nodes relative to max |R| (0 if R = 0)."""
    M = R.entries
    m = np.abs(M).max()
    if m == 0:
        return 0.0
    D = R.grid.D
    d = (D @ M - M @ D.T)[1:-1, 1:-1]
    return float(np.abs(d).max() / m)


def apply_kernel(kernel: KernelMatrix, f: ModeField) -> ModeField:
    """Quadrature contraction over z."""
    if f.grid is not kernel.grid:
        raise ValueError("kernel and field live on different grids")
    return f.with_values(kernel.operator @ f.values)


def boundary_column(kernel: KernelMatrix, b) -> ModeField:
    """G(t, y, 0) * b as a ModeField."""
    return ModeField(kernel.xi, kernel.entries[:, 0] * b, kernel.grid)


# ---------------------------------------------------------------------------
# envelopes of the residual kernel
# ---------------------------------------------------------------------------

def envelope(kernel: KernelMatrix, theta, k=0, conormal=False):
    """Right-hand side of the residual-kernel bound (implicit constant 1).

    With ``conormal`` the (y d_y)^k shape is used, otherwise the d_z^k one.
    """
    y = kernel.grid.nodes
    Y, Z = y[:, None], y[None, :]
    s = Y + Z
    b, nu, t, xi = kernel.b, kernel.nu, kernel.t, kernel.xi
    nt = nu * t
    gauss = np.exp(-theta * s**2 / nt - nu * xi * xi * t / 8)
    if conormal:
        return b * ((Y * b) ** k + 1) * np.exp(-theta * b * s) + ((Y / math.sqrt(nt)) ** k + 1) * gauss / math.sqrt(nt)
    return b ** (k + 1) * np.exp(-theta * b * s) + gauss / nt ** ((k + 1) / 2)


def derivative_entries(R: KernelMatrix, k=0, conormal=False):
    """d_z^k R, or (y d_y)^k R, on the grid tensor."""
    M = R.entries
    D = R.grid.D
    if conormal:
        yD = R.grid.nodes[:, None] * D
        for _ in range(k):
            M = yD @ M
        return M
    for _ in range(k):
        M = M @ D.T
    return M


def fit_envelope(kernels, k=0, conormal=False, thetas=None, c_max=50.0, rel_floor=None):
    """Largest theta (from a descending grid) whose fitted constant is <= c_max.

    Returns (C, theta).  Entries below ``rel_floor`` of the maximum are
    ignored.  Spectral differentiation amplifies round-off by roughly n^2 per
    derivative, so the default floor is max(1e-8, 1e-14 n^(2k)).  If no theta qualifies the smallest
    theta and its constant are returned.
    """
    if thetas is None:
        thetas = np.round(np.arange(1.0, 0.0, -0.01), 2)
    derivs = [np.abs(derivative_entries(R, k, conormal)) for R in kernels]
    if rel_floor is None:
        n = max(R.grid.n for R in kernels)
        rel_floor = max(1e-8, 1e-14 * float(n) ** (2 * k))
    best = None
    for th in thetas:
        C = 0.0
        for R, d in zip(kernels, derivs):
            m = d.max()
            if m == 0:
                continue
            mask = d > rel_floor * m
            env = envelope(R, th, k, conormal)
            C = max(C, float(np.max(d[mask] / env[mask])))
        best = (C, float(th))
        if C <= c_max:
            return best
    return best


# ---------------------------------------------------------------------------
# binary dump
# ---------------------------------------------------------------------------

_KHEAD = struct.Struct("<4sIqddQ")


def write_kernel(path, kernel: KernelMatrix):
    """Write entries as 'NSHK', u32 version, i64 xi, f64 t, f64 nu, u64 n, f64 row-major."""
    ent = np.ascontiguousarray(kernel.entries, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_KHEAD.pack(b"NSHK", 1, kernel.xi, kernel.t, kernel.nu, ent.shape[0]))
        fh.write(ent.tobytes())


def read_kernel(path):
    """Inverse of write_kernel; returns (xi, t, nu, entries)."""
    with open(path, "rb") as fh:
        head = fh.read(_KHEAD.size)
        magic, version, xi, t, nu, n = _KHEAD.unpack(head)
        if magic != b"NSHK":
            raise ValueError("not a kernel dump")
        if version != 1:
            raise ValueError(f"unsupported kernel dump version {version}")
        ent = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n)
    return xi, t, nu, ent.copy()
