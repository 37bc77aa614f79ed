"""Analytic norms of a datum: the X, Y and Z parts and the triple norm."""
# %%
import dataclasses

from nshs import RunConfig, analytic_datum, make_grid, triple_norm, validate_initial_data
from nshs.norms import NormParams

cfg = RunConfig(nu=0.05, K=8, ny=96)
grid = make_grid(cfg.ny, cfg.ymax, cfg.nu)
w = analytic_datum(cfg, grid)
report = triple_norm(w, NormParams.from_config(cfg))
print(f"X_t = {report.x_t:.6g}   Y_t = {report.y_t:.6g}   Z = {report.z:.6g}")
print(f"triple norm = {report.triple:.6g}")

# %% larger analyticity radius means larger norms
for mu0 in (0.025, 0.05, 0.1):
    p = NormParams.from_config(dataclasses.replace(cfg, mu0=mu0, T=0.45 * mu0 / cfg.gamma))
    print(f"mu0={mu0:<5} triple={triple_norm(w, p).triple:.6g}")

# %% admissibility of the datum, with a grid refinement check
info = validate_initial_data(w, cfg)
for k in sorted(info):
    print(f"{k}: {info[k]}")
