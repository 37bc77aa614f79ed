"""The half-plane heat kernel with the nonlocal boundary condition.

Builds the numerical Green function of one Fourier mode, splits off the
explicit heat part and checks the envelope of the residual.
"""
# %%
import numpy as np

from nshs import make_grid
from nshs.kernels import fit_envelope, green_numeric, htilde_matrix, residual_R, yz_residual

nu, xi, t = 0.05, 2, 0.05
grid = make_grid(96, 8.0, nu)
G = green_numeric(xi, t, nu, grid)
H = htilde_matrix(xi, t, nu, grid)
R = residual_R(G, H)
print("residual kernel sup:", float(np.abs(R.entries).max()))
print("yz-weighted residual:", yz_residual(R))

# %% exponential envelope fits for the residual and its conormal derivative
Rs = [residual_R(green_numeric(x, s, nu, grid), htilde_matrix(x, s, nu, grid))
      for x in (0, 1, 4) for s in (1e-2, 5e-2)]
for k in (0, 1):
    fit = fit_envelope(Rs, k=k, conormal=True)
    print(f"conormal order {k}: fitted envelope", fit)

# %% row masses of the xi = 0 heat part next to the wall
H0 = htilde_matrix(0, t, nu, grid, kind="H")
mass = H0.entries @ grid.quad_weights
print("row masses near the wall:", np.round(mass[:4], 6))
