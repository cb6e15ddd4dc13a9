"""Simulation-driven reach-tube over-approximation and safety verification
for nonlinear ODE systems."""

from .errors import (
    BlowupError,
    ConfigError,
    DomainExitError,
    ReachguardError,
    RefinementFloorError,
    SimulationError,
    UnboundedIntervalError,
    ValidationError,
)
from .geometry import (
    CONTAINED,
    DISJOINT,
    OVERLAPS,
    Ball,
    Box,
    Cover,
    HalfspaceSet,
    bloat,
    box_hull,
    classify_against_unsafe,
    diameter,
    partition_cover,
)
from .intervals import Interval, eval_interval, jacobian_error_bound, parse_expr
from .isdf import (
    InputSignal,
    ISCoefficients,
    build_input_reachtube,
    compute_is_ldf,
    deviation_integrals,
    eval_is_discrepancy,
)
from .ldf import (
    DiscrepancyCoefficients,
    Reachtube,
    build_reachtube,
    compute_ldf,
    compute_ldf_ct,
    eval_discrepancy,
)
from .linalg import (
    Transform,
    contraction_check,
    entrywise_norm_upper,
    real_block_transform,
    sym_part_max_eig,
    two_norm,
    weyl_shift_bounds,
)
from .models import (
    DynamicalSystem,
    VerificationProblem,
    get_model,
    make_user_model,
    model_names,
    validate_model,
)
from .simulate import SimulationTrace, reference_trajectory, simulate_trace
from .verify import (
    SAFE,
    UNKNOWN,
    UNSAFE,
    Verdict,
    WitnessInfo,
    check_tube,
    verify_safety,
)

__version__ = "0.1.0"
