"""Inviscid limit: Navier-Stokes runs against one Euler reference.

A short sweep over viscosities; expect a minute of runtime.
"""
# %%
from nshs import RunConfig, kato_datum
from nshs.harness import run_convergence

cfg = RunConfig(K=4, ny=96, T=0.1)
table = run_convergence(cfg, [4e-3, 2e-3, 1e-3], datum=kato_datum)
print(table.to_csv())

# %% rates: velocity distance and dissipation against nu on log-log axes
print(f"distance slope    {table.slope:.3f}")
print(f"dissipation slope {table.dissipation_slope:.3f}")
print("failures:", table.metadata["failures"] or "none")
