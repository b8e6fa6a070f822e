"""Lipschitz polymatrix games: checking, solving, purification, populations."""

from .errors import (
    BinaryOnlyError,
    BoundBreach,
    BudgetExceeded,
    DistributionError,
    InternalError,
    LippolyError,
    PreconditionViolation,
    UsageError,
)
from .game import (
    BOUND_TOL,
    LipschitzViolation,
    LipschitzWitness,
    MixedProfile,
    PolymatrixGame,
    PureProfile,
    RangeViolation,
    RegretReport,
    Valid,
    best_response,
    canonical_bytes,
    check_game,
    discrepancy,
    expected_payoff,
    game_digest,
    game_from_json,
    game_to_json,
    load_game,
    mixed_payoff,
    profile_from_json,
    profile_to_json,
    pure_payoff,
    regret,
    regret_report,
    save_game,
    total_variation,
)
from .solver import (
    SolveResult,
    SolverConfig,
    brute_force_kuniform,
    default_target_epsilon,
    solve_mixed,
)
from .purify import purify, trace_to_json
from .purify.maction import thresholds_m
from .purify.binary import (
    BinaryPurifyTrace,
    ane_to_wsne_binary,
    correct_binary,
    purify_rounding_binary,
)
from .purify.maction import (
    MActionPurifyTrace,
    ane_to_wsne_m,
    correct_m,
    purify_rounding_m,
)
from .population import PopulationGame, aggregate, induce, reduce_and_solve

__all__ = [
    "BOUND_TOL",
    "BinaryOnlyError",
    "BinaryPurifyTrace",
    "BoundBreach",
    "BudgetExceeded",
    "DistributionError",
    "InternalError",
    "LippolyError",
    "LipschitzViolation",
    "LipschitzWitness",
    "MActionPurifyTrace",
    "MixedProfile",
    "PolymatrixGame",
    "PopulationGame",
    "PreconditionViolation",
    "PureProfile",
    "RangeViolation",
    "RegretReport",
    "SolveResult",
    "SolverConfig",
    "UsageError",
    "Valid",
    "aggregate",
    "ane_to_wsne_binary",
    "ane_to_wsne_m",
    "best_response",
    "brute_force_kuniform",
    "canonical_bytes",
    "check_game",
    "correct_binary",
    "correct_m",
    "default_target_epsilon",
    "discrepancy",
    "expected_payoff",
    "game_digest",
    "game_from_json",
    "game_to_json",
    "induce",
    "load_game",
    "mixed_payoff",
    "profile_from_json",
    "profile_to_json",
    "pure_payoff",
    "purify",
    "purify_rounding_binary",
    "purify_rounding_m",
    "reduce_and_solve",
    "regret",
    "regret_report",
    "save_game",
    "solve_mixed",
    "thresholds_m",
    "total_variation",
    "trace_to_json",
]

__version__ = "0.1.0"
