"""Convex surrogates, the interior-point solver and the SCA driver."""

from .benchmarks import SCHEME_ORDER, SCHEMES, Scheme, run_benchmark
from .errors import AnchorInfeasibleError, OptimizationError, ProgramError, SubproblemError
from .program import ConvexProgram, Expression
from .sca import (
    IterationRecord,
    ScaOptions,
    Trace,
    accuracy_step,
    init_feasible,
    resource_step,
    run,
    run_loop,
)
from .solver import SolverResult, SolverSettings, kkt_residual, solve
from .subproblems import FixedValues, build_accuracy_program, build_resource_program
from .surrogates import (
    Surrogate,
    accuracy_ratio_upper,
    bilinear_lower,
    bilinear_upper,
    fdma_rate_lower,
    noma_rate_lower,
    ratio_upper,
    sqrt_product_upper,
)
from .trace_io import trace_to_csv, trace_to_dict, trace_to_json

__all__ = [
    "AnchorInfeasibleError",
    "ConvexProgram",
    "Expression",
    "FixedValues",
    "IterationRecord",
    "OptimizationError",
    "ProgramError",
    "SCHEMES",
    "SCHEME_ORDER",
    "ScaOptions",
    "Scheme",
    "SolverResult",
    "SolverSettings",
    "SubproblemError",
    "Surrogate",
    "Trace",
    "accuracy_ratio_upper",
    "accuracy_step",
    "bilinear_lower",
    "bilinear_upper",
    "build_accuracy_program",
    "build_resource_program",
    "fdma_rate_lower",
    "init_feasible",
    "kkt_residual",
    "noma_rate_lower",
    "ratio_upper",
    "resource_step",
    "run",
    "run_benchmark",
    "run_loop",
    "solve",
    "sqrt_product_upper",
    "trace_to_csv",
    "trace_to_dict",
    "trace_to_json",
]
