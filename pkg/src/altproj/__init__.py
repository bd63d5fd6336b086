"""Alternating projections between semialgebraic convex sets and linear
subspaces: simulation, exact sublinear convergence-rate prediction, and
verification of the predictions against traces and a recursion oracle."""

from .apm import (
    RecursionSpec,
    Scenario,
    Trace,
    fejer_check,
    run_apm,
    run_recursion_oracle,
    step_residual_check,
    write_trace_csv,
)
from .errors import (
    AltprojError,
    DegenerateInputError,
    InsufficientDataError,
    NotConvenientError,
    ParseError,
    ScenarioError,
    SolverFailure,
    ZeroSeriesError,
)
from .estimate import RateEstimate, check_limit_product, detect_linear, fit_rate
from .polyalg import (
    MultiPoly,
    NewtonDiagram,
    UniSeries,
    emit_poly,
    gradient,
    loja_exponent_convenient,
    lowest_term,
    newton_diagram,
    parse_poly,
    restrict_line,
    substitute_series,
)
from .proj import (
    HypographSet,
    KKTResult,
    LinearSubspace,
    SolveOpts,
    TwoPolySet,
    project_hypograph,
    project_subspace,
    project_twopoly,
    psi_inverse,
    psi_map,
)
from .rates import (
    Cond,
    CurveSeries,
    RateKind,
    RatePrediction,
    cond2poly_check,
    distance_series,
    predict_curve_rate,
    predict_hypersurface_rate,
    predict_upper_bound_hyperplane,
    predict_upper_bound_subspace,
    solve_curve_series,
    solve_implicit_series,
)
from .region import RegionLabel, classify_point, classify_scan, trace_partition_boundary

__all__ = [
    "AltprojError", "DegenerateInputError", "InsufficientDataError",
    "NotConvenientError", "ParseError", "ScenarioError", "SolverFailure",
    "ZeroSeriesError",
    "MultiPoly", "NewtonDiagram", "UniSeries", "emit_poly", "gradient",
    "loja_exponent_convenient", "lowest_term", "newton_diagram", "parse_poly",
    "restrict_line", "substitute_series",
    "HypographSet", "KKTResult", "LinearSubspace", "SolveOpts", "TwoPolySet",
    "project_hypograph", "project_subspace", "project_twopoly",
    "psi_inverse", "psi_map",
    "RecursionSpec", "Scenario", "Trace", "fejer_check", "run_apm",
    "run_recursion_oracle", "step_residual_check", "write_trace_csv",
    "Cond", "CurveSeries", "RateKind", "RatePrediction", "cond2poly_check",
    "distance_series", "predict_curve_rate", "predict_hypersurface_rate",
    "predict_upper_bound_hyperplane", "predict_upper_bound_subspace",
    "solve_curve_series", "solve_implicit_series",
    "RegionLabel", "classify_point", "classify_scan", "trace_partition_boundary",
    "RateEstimate", "check_limit_product", "detect_linear", "fit_rate",
]
