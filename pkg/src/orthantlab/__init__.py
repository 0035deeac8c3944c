"""Reflecting Brownian motions in the nonnegative orthant.

Tools for a family of reflected diffusions where the deterministic fluid
dynamics and the stochastic recurrence behavior disagree: matrix
classification, exhaustive linear-complementarity solving, fluid-path
integration and verification, reproducible Euler-projection simulation with
pathwise validation, Monte Carlo experiment suites, and a Brownian pursuit
engine.
"""

__version__ = "0.1.0"

from .fluid import AffinePath, FluidVerdict, attraction_verdict, integrate, verify_affine_path
from .lcp import LcpInfeasible, LcpSolution, skorokhod_step, solve_all
from .matclass import (
    CapabilityError,
    MatrixClassReport,
    check_necessary_condition,
    classify_matrix,
    is_completely_s,
    is_m_matrix,
    is_p_matrix,
    is_s_matrix,
)
from .model import (
    CANONICAL_DELTAS,
    ConstraintViolation,
    DimensionError,
    ExampleDeltas,
    PathGrid,
    SrbmModel,
    StateVec,
    build_example_r,
    example_model,
    foster_norm,
    model_from_dict,
    model_to_dict,
    validate_deltas,
)
from .pursuit import (
    CaptureSample,
    PursuitConfig,
    SurvivalCurve,
    capture_times,
    closed_form_survival_single,
    simulate_capture,
    survival_curve,
)
from .sde import (
    HittingSample,
    NumericError,
    PathValidationReport,
    SimConfig,
    hitting_time,
    simulate,
    validate_path,
)

__all__ = [
    "__version__",
    "AffinePath",
    "CANONICAL_DELTAS",
    "CapabilityError",
    "CaptureSample",
    "ConstraintViolation",
    "DimensionError",
    "ExampleDeltas",
    "FluidVerdict",
    "HittingSample",
    "LcpInfeasible",
    "LcpSolution",
    "MatrixClassReport",
    "NumericError",
    "PathGrid",
    "PathValidationReport",
    "PursuitConfig",
    "SimConfig",
    "SrbmModel",
    "StateVec",
    "SurvivalCurve",
    "attraction_verdict",
    "build_example_r",
    "capture_times",
    "check_necessary_condition",
    "classify_matrix",
    "closed_form_survival_single",
    "example_model",
    "foster_norm",
    "hitting_time",
    "integrate",
    "is_completely_s",
    "is_m_matrix",
    "is_p_matrix",
    "is_s_matrix",
    "model_from_dict",
    "model_to_dict",
    "simulate",
    "simulate_capture",
    "skorokhod_step",
    "solve_all",
    "survival_curve",
    "validate_deltas",
    "validate_path",
    "verify_affine_path",
]
