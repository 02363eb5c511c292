"""Spectral covariance, decay regimes and simulation for 2-D symmetric alpha-stable linear fields."""

from .constants import constant_eval
from .covariance import CovResult, Lag, SpectralMasses, exact_cf, rho, scc, spectral_masses
from .errors import (
    AlphaOutOfRange,
    BetaTooSmall,
    ConstantEvaluationFailed,
    DegenerateMarginal,
    DirectionRequired,
    InvalidSpec,
    InvalidWeights,
    LimitUnavailable,
    LogDomainError,
    NonIntegrable,
    StableFieldError,
    ToleranceUnreachable,
    TooFewExceedances,
    TruncationTooCoarse,
    UnboundedRegion,
    WeightLimitUnavailable,
)
from .field import (
    ConstantWeights,
    FilterSpec,
    RationalWeights,
    StabilityParams,
    TableWeights,
    alpha_norm,
    coefficient,
    validate_params,
    weight_limits,
)
from .regimes import Direction, Regime, Uncovered, classify, params_from_text, rate_eval
from .simulate import PairSample, SimConfig, ecf_check, sample_sas, simulate_pairs, tail_rho_estimate
from .verify import ConvergenceReport, adjudicate_case6b, convergence_report, lag_sequence, verify
from .vkernel import bound_directional, bound_symmetric, bound_theta, theta_constant, v_eval, v_vec

__version__ = "0.1.0"

__all__ = [
    "AlphaOutOfRange",
    "BetaTooSmall",
    "ConstantEvaluationFailed",
    "ConstantWeights",
    "ConvergenceReport",
    "CovResult",
    "DegenerateMarginal",
    "Direction",
    "DirectionRequired",
    "FilterSpec",
    "InvalidSpec",
    "InvalidWeights",
    "Lag",
    "LimitUnavailable",
    "LogDomainError",
    "NonIntegrable",
    "PairSample",
    "RationalWeights",
    "Regime",
    "SimConfig",
    "SpectralMasses",
    "StabilityParams",
    "StableFieldError",
    "TableWeights",
    "ToleranceUnreachable",
    "TooFewExceedances",
    "TruncationTooCoarse",
    "UnboundedRegion",
    "Uncovered",
    "WeightLimitUnavailable",
    "adjudicate_case6b",
    "alpha_norm",
    "bound_directional",
    "bound_symmetric",
    "bound_theta",
    "classify",
    "coefficient",
    "constant_eval",
    "convergence_report",
    "ecf_check",
    "exact_cf",
    "lag_sequence",
    "params_from_text",
    "rate_eval",
    "rho",
    "sample_sas",
    "scc",
    "simulate_pairs",
    "spectral_masses",
    "tail_rho_estimate",
    "theta_constant",
    "v_eval",
    "v_vec",
    "validate_params",
    "verify",
    "weight_limits",
]
