"""Sensitivity analysis of a 3-axis translational parallel kinematic machine."""

from .errors import (
    ConfigError,
    EmptyGrid,
    FlatParallelogram,
    KinematicsError,
    NoConvergence,
    OutOfWorkspace,
    PkmSensError,
    SingularConfiguration,
)
from .geometry import (
    LEG_ROTATIONS,
    LegState,
    MachineParams,
    diagonal_point,
    forward_kinematics,
    inverse_kinematics,
)
from .linkage import (
    PARAM_NAMES,
    ROW_NAMES,
    global_sensitivity,
    mean_abs_sensitivity,
    nominal_design,
    sensitivity_matrix,
)
from .diffvec import (
    FULL_PARAM_LABELS,
    THETA_PARAM_LABELS,
    SensitivityModel,
    build_model,
    full_param_names,
    global_rotation_indices,
    orientation_indices,
    position_indices,
    theta_param_names,
)
from .oracle import (
    PerturbedLegInputs,
    PoseError,
    ToleranceSpec,
    closure_residuals,
    fd_linkage_sensitivity,
    fd_pose_jacobians,
    monte_carlo,
    solve_perturbed_pose,
    validate_sensitivities,
)
from .sweep import SweepTable, diagonal_samples, grid_points, sweep

__version__ = "0.1.0"
