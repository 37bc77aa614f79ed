"""Half-plane Navier-Stokes vorticity solver and verification laboratory."""
from .field import ConfigError, RunConfig, VorticityState, YGrid, make_grid, to_physical, from_physical
from .biot_savart import compatibility, energy, enstrophy, nonlinearity, velocity
from .kernels import ModeOperator, apply_kernel, green_numeric, heat_H, heat_Htilde, mode_operator
from .norms import NormParams, NormReport, triple_norm, x_t_norm, y_t_norm, z_norm
from .solvers import (
    Trajectory,
    analytic_datum,
    bump_datum,
    direct_advance,
    euler_advance,
    kato_datum,
    maekawa_datum,
    mild_advance,
    read_checkpoint,
    run,
    validate_initial_data,
    write_checkpoint,
)
from .config import parse_config, serialize_config

__version__ = "0.1.0"
