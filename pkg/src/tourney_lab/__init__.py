"""Monte Carlo evaluation of tournament formats.

Builds statistically robust rankings from large per-pair game pools, replays
candidate tournament formats by bootstrap-sampling those pools, and scores
each format by how far its final rankings drift from the truth (L1 rank
distance).
"""

from .model import (
    ModelFileError,
    PairSummary,
    PoolLoadError,
    ResultPool,
    Scoreline,
    SyntheticModel,
    TeamSet,
    generate_synthetic_pool,
    load_pool,
    load_synthetic_model,
    sample_game,
    write_game_records,
    write_synthetic_model,
)
from .ranking import (
    PointsTable,
    Ranking,
    SchemeKind,
    continuous_totals,
    discrete_totals,
    game_points,
    l1_distance,
    rank_from_points,
    ranking_from_lines,
    scheme_totals,
)
from .formats import (
    Bracket,
    BracketGame,
    ClassificationPair,
    FormatError,
    FormatPlan,
    GroupRoundRobin,
    SeedingPolicy,
    TournamentOutcome,
    TwoLeggedTie,
    execute,
    outcome_csv_rows,
    plan_from_token,
    plan_pure_round_robin,
    plan_rc2012,
    plan_rc2013_double_elim,
    plan_rc2014_hybrid,
)
from .montecarlo import (
    ComparisonReport,
    DiscrepancyDistribution,
    ExperimentConfig,
    TruthReport,
    compare_formats,
    derive_rng,
    estimate_truth,
    replicate_d1_values,
    replicate_rng,
    run_experiment,
    simulate_replicate,
)

__version__ = "0.1.0"

__all__ = [
    "Bracket",
    "BracketGame",
    "ClassificationPair",
    "ComparisonReport",
    "DiscrepancyDistribution",
    "ExperimentConfig",
    "FormatError",
    "FormatPlan",
    "GroupRoundRobin",
    "ModelFileError",
    "PairSummary",
    "PointsTable",
    "PoolLoadError",
    "Ranking",
    "ResultPool",
    "SchemeKind",
    "Scoreline",
    "SeedingPolicy",
    "SyntheticModel",
    "TeamSet",
    "TournamentOutcome",
    "TruthReport",
    "TwoLeggedTie",
    "compare_formats",
    "continuous_totals",
    "derive_rng",
    "discrete_totals",
    "estimate_truth",
    "execute",
    "game_points",
    "generate_synthetic_pool",
    "l1_distance",
    "load_pool",
    "load_synthetic_model",
    "outcome_csv_rows",
    "plan_from_token",
    "plan_pure_round_robin",
    "plan_rc2012",
    "plan_rc2013_double_elim",
    "plan_rc2014_hybrid",
    "rank_from_points",
    "ranking_from_lines",
    "replicate_d1_values",
    "replicate_rng",
    "run_experiment",
    "sample_game",
    "scheme_totals",
    "simulate_replicate",
    "write_game_records",
    "write_synthetic_model",
]
