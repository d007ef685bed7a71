"""Exact discretization toolkit: non-negative quadrature, conic
feasibility with certificates, p-norm equalities, frame scaling, and
determinant-maximizing designs, all on discrete measures."""

__version__ = "0.1.0"

from .caratheodory import reduce, reduce_convex
from .cones import (
    FeasibilityResult,
    cone_membership,
    discretize_functional,
    discretize_linear,
    suitability,
)
from .dopt import christoffel_rescale, dopt_maximize, extract_rule
from .frames import (
    FrameFamily,
    FrameOperator,
    frame_operator,
    gram_vectorize,
    scalability_test,
    subsample_frame,
    tune_to_target,
)
from .measures import DiscreteMeasure, MomentVector, Sampler, moments, sample_measure
from .mz import mz_rule, mz_verify, power_system, product_system
from .systems import (
    EvaluationMatrix,
    FunctionSystem,
    build_system,
    effective_real_dimension,
    evaluate,
    numerical_rank,
    realify,
    select_independent_points,
)
from .tchakaloff import QuadratureRule, tchakaloff_rule, tchakaloff_rule_normalized
from .widths import (
    RKHSSpec,
    kolmogorov_bound_rule,
    mc_rule_bound_check,
    tail_bound_rule,
    worst_case_error,
)

__all__ = [
    "DiscreteMeasure",
    "EvaluationMatrix",
    "FeasibilityResult",
    "FrameFamily",
    "FrameOperator",
    "FunctionSystem",
    "MomentVector",
    "QuadratureRule",
    "RKHSSpec",
    "Sampler",
    "build_system",
    "christoffel_rescale",
    "cone_membership",
    "discretize_functional",
    "discretize_linear",
    "dopt_maximize",
    "effective_real_dimension",
    "evaluate",
    "extract_rule",
    "frame_operator",
    "gram_vectorize",
    "kolmogorov_bound_rule",
    "mc_rule_bound_check",
    "moments",
    "mz_rule",
    "mz_verify",
    "numerical_rank",
    "power_system",
    "product_system",
    "realify",
    "reduce",
    "reduce_convex",
    "sample_measure",
    "scalability_test",
    "select_independent_points",
    "subsample_frame",
    "suitability",
    "tail_bound_rule",
    "tchakaloff_rule",
    "tchakaloff_rule_normalized",
    "tune_to_target",
    "worst_case_error",
]
