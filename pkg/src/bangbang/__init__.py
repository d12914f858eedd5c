"""Bang-bang optimal control of scalar linear ODEs.

Immersed-interface Euler schemes for the state and adjoint, adjoint
gradients with trapezoid quadrature, and a binary trust-region method whose
subproblems are solved exactly by greedy selection.
"""
from .adjoint import assemble_adjoint_system, correction_term_adjoint, solve_adjoint_iim
from .errors import ConfigurationError, NumericalError
from .mesh import (
    AdjointJumpData,
    InterfaceMode,
    PointClassification,
    StateJumpData,
    TimeMesh,
    adjoint_jumps,
    build_mesh,
    classify_backward,
    classify_forward,
    require_interior_nodes,
    state_jumps,
)
from .objective import ReducedProblem, evaluate_gradient, evaluate_objective
from .optimizer import (
    OptimizerConfig,
    TraceRow,
    TrustRegionResult,
    knapsack_step,
    relaxation_solve,
    round_relaxation,
    trust_region_solve,
    update_radius,
)
from .problem import (
    Constant,
    ControlPartition,
    PerIntervalConstant,
    PiecewiseFunction,
    ProblemSpec,
    ScalarField,
    Sinusoid,
    Tabulated,
    alternating_control,
    control_jump,
    control_value,
    field_jump,
)
from .state import (
    BlockSystem,
    TrajectorySolution,
    assemble_state_system,
    correction_term_state,
    solve_state_euler,
    solve_state_iim,
)

__version__ = "0.1.0"
