"""Quantized Markov chains: spectra of the walk unitary and marked-set detection."""

from .errors import (
    DimensionMismatch,
    EigensolverFailure,
    EmptyMarkedSet,
    InputError,
    NegativeEntry,
    NoHitWithinCap,
    NormDrift,
    NotOrthonormal,
    NotSquare,
    NotSymmetric,
    NumericalError,
    RowSumViolation,
    SizeCapError,
    TooLarge,
    WalkError,
)
from .findmarked import (
    AmpCurve,
    CostLedger,
    FindMarkedAnalysis,
    FindMarkedOutcome,
    amp_curve,
    classical_failure_probability,
    classical_find_marked,
    decision_procedure,
    perturbed_walk_unitary,
    phase_separation,
    quantum_find_marked,
    quantum_find_marked_exact,
)
from .markov import (
    ChainAnalysis,
    MarkedSet,
    StochasticMatrix,
    eigenvalue_gap,
    half_discriminant,
    johnson_chain,
    perturb_absorbing,
    spectral_radius_restricted,
    validate_stochastic,
)
from .spectral import (
    Discriminant,
    LiftedSpectrum,
    OrthonormalSystem,
    brute_force_mu,
    gram_discriminant,
    lift_spectrum,
    reflection,
    tau_norm_check,
    tilde,
)
from .walk import (
    BipartiteWalk,
    QuantumState,
    WalkOperator,
    apply_power,
    build_projectors,
    stationary_state,
    walk_unitary,
)

__version__ = "0.1.0"

__all__ = [
    "amp_curve",
    "AmpCurve",
    "apply_power",
    "BipartiteWalk",
    "brute_force_mu",
    "build_projectors",
    "ChainAnalysis",
    "classical_failure_probability",
    "classical_find_marked",
    "CostLedger",
    "decision_procedure",
    "DimensionMismatch",
    "Discriminant",
    "EigensolverFailure",
    "eigenvalue_gap",
    "EmptyMarkedSet",
    "FindMarkedAnalysis",
    "FindMarkedOutcome",
    "gram_discriminant",
    "half_discriminant",
    "InputError",
    "johnson_chain",
    "lift_spectrum",
    "LiftedSpectrum",
    "MarkedSet",
    "NegativeEntry",
    "NoHitWithinCap",
    "NormDrift",
    "NotOrthonormal",
    "NotSquare",
    "NotSymmetric",
    "NumericalError",
    "OrthonormalSystem",
    "perturb_absorbing",
    "perturbed_walk_unitary",
    "phase_separation",
    "quantum_find_marked",
    "quantum_find_marked_exact",
    "QuantumState",
    "reflection",
    "RowSumViolation",
    "SizeCapError",
    "spectral_radius_restricted",
    "stationary_state",
    "StochasticMatrix",
    "tau_norm_check",
    "tilde",
    "TooLarge",
    "validate_stochastic",
    "walk_unitary",
    "WalkError",
    "WalkOperator",
]
