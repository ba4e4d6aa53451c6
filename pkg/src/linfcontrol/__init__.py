"""Minimal sup-norm and minimal-time null controls for linear systems.

The package solves the minimal-norm problem at a fixed horizon, inverts it
to get minimal times, synthesizes bang-bang controls from dual vectors, and
sorts problem instances into the bang-bang decomposition cells.
"""

from .classifier import (
    BoundaryData,
    BoundaryDataError,
    CellLabel,
    Prediction,
    classification_record,
    classify_finite_dim,
    classify_norm_pair,
    classify_time_pair,
    cross_validate,
    finite_dim_boundary_data,
)
from .lti import (
    ControlSignal,
    LtiSystem,
    ReachableSubspace,
    TimeGrid,
    kalman_decomposition,
    load_system,
    observation_kernel,
    propagate,
    reachable_subspace,
    system_from_dict,
    system_to_dict,
)
from .matrix_core import DimensionError, expm, orth_complement, range_basis, rank
from .models import (
    SpectralModel,
    double_integrator,
    heat_point_control,
    load_model,
    scalar_system,
    spectral_model,
    t0_blowup_profile,
    truncate,
)
from .norm_solver import (
    DualCertificate,
    NormOptions,
    NormProblem,
    NormSolution,
    NotConverged,
    Status,
    check_bangbang,
    gauge,
    minimal_norm,
    norm_at_infinity,
    null_control_cost,
    synthesize_control,
)
from .oracle import OracleBracket, dual_grid_search, primal_grid_upper_bound, scalar_closed_form
from .time_solver import TimeProblem, TimeSolution, TimeStatus, minimal_time, roundtrip_check

__version__ = "0.1.0"
