"""Optimal Markovian couplings of Lévy processes with finitely many jump sizes."""

from .core import (
    CouplingCertificate,
    DimensionError,
    DiscreteLevyMeasure,
    LevyCoupling,
    LevyTriplet,
    ValidationError,
    covariance_matrix,
    mean_vector,
    second_moment,
    validate_coupling,
)
from .gen_metric import (
    CoupledTriplet,
    GeneratorDistance,
    build_optimal_coupling,
    generator_distance,
    lambda_convergence_report,
    theta2,
    trivial_coupling,
    truncate_measure,
)
from .levy_ot import (
    DualCheckError,
    SolverError,
    TransportSolution,
    classical_ot_solve,
    extract_duals,
    levy_ot_solve,
)
from .monotonicity import check_cyclical_monotonicity
from .psd import bures_wasserstein_sq, dual_matrix_certificate, optimal_cross_block
from .simulate import (
    McEstimate,
    PathSample,
    estimate_cost_growth,
    estimate_sup_distance,
    simulate_path,
)

__all__ = [
    "CoupledTriplet",
    "CouplingCertificate",
    "DimensionError",
    "DiscreteLevyMeasure",
    "DualCheckError",
    "GeneratorDistance",
    "LevyCoupling",
    "LevyTriplet",
    "McEstimate",
    "PathSample",
    "SolverError",
    "TransportSolution",
    "ValidationError",
    "build_optimal_coupling",
    "bures_wasserstein_sq",
    "check_cyclical_monotonicity",
    "classical_ot_solve",
    "covariance_matrix",
    "dual_matrix_certificate",
    "estimate_cost_growth",
    "estimate_sup_distance",
    "extract_duals",
    "generator_distance",
    "lambda_convergence_report",
    "levy_ot_solve",
    "mean_vector",
    "optimal_cross_block",
    "second_moment",
    "simulate_path",
    "theta2",
    "trivial_coupling",
    "truncate_measure",
    "validate_coupling",
]
