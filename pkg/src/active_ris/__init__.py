"""Joint precoder / reflect-coefficient design for an active-RIS-aided
multiuser MISO downlink: seeded channel simulator, sum-rate objective and
surrogate, exact KKT-certified projections, a block-coordinate solver with
closed-form updates, and a benchmark harness."""

from .channel import (ChannelSet, FadingConfig, Geometry, dbm_to_watts,
                      effective_channel, generate_channels, path_loss_db,
                      watts_to_dbm)
from .harness import (ExperimentConfig, ResultRow, emit, load_config,
                      run_experiment, sweep_sizes)
from .objective import (AuxiliaryVars, PowerBudget, ResidualReport,
                        constraint_residuals, per_user_rates, sinr, sum_rate,
                        surrogate_g)
from .projections import (EllipsoidSpec, ProjectionCertificate, project_ball,
                          project_box_ellipsoid, project_ellipsoid,
                          project_per_antenna)
from .solver import (PhiSubproblem, Solution, SolverConfig,
                     SolverDivergenceError, WSubproblem,
                     assemble_phi_subproblem, assemble_w_subproblem,
                     bsum_solve, default_initialization, update_phi,
                     update_rho, update_u, update_w)

__all__ = [
    "AuxiliaryVars", "ChannelSet", "EllipsoidSpec", "ExperimentConfig",
    "FadingConfig", "Geometry", "PhiSubproblem", "PowerBudget",
    "ProjectionCertificate", "ResidualReport", "ResultRow", "Solution",
    "SolverConfig", "SolverDivergenceError", "WSubproblem",
    "assemble_phi_subproblem", "assemble_w_subproblem", "bsum_solve",
    "constraint_residuals", "dbm_to_watts", "default_initialization",
    "effective_channel", "emit", "generate_channels", "load_config",
    "path_loss_db", "per_user_rates", "project_ball",
    "project_box_ellipsoid", "project_ellipsoid", "project_per_antenna",
    "run_experiment", "sinr", "sum_rate", "surrogate_g", "sweep_sizes",
    "update_phi", "update_rho", "update_u", "update_w", "watts_to_dbm",
]
