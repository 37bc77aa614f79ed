"""Numerical checks of the inequalities behind the analytic estimates."""
# %%
from nshs import RunConfig, bump_datum, run
from nshs.verify import (
    check_int_t,
    check_nonlinear_estimates,
    check_recovery,
    check_sobolev_gronwall,
    check_weight_properties,
    random_state,
)

cfg = RunConfig(T=0.05)
reports = [
    check_int_t(),
    check_recovery(seed=0, n_members=8),
    check_weight_properties(),
    check_nonlinear_estimates(random_state(cfg, seed=0)),
    check_sobolev_gronwall(run(cfg, bump_datum(cfg), "mild")),
]
for r in reports:
    print(f"{r.name:<28} {'pass' if r.passed else 'FAIL'}  fitted constant {r.fitted_constant:.4g}")

# %% every report serialises to JSON for the record
print(len(reports[0].to_json()), "bytes of JSON for", reports[0].name)
