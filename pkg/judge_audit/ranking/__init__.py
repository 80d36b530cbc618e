from judge_audit.ranking.battles import Battle, Outcome, judgments_to_battles
from judge_audit.ranking.bradley_terry import (
    RatingTable,
    bootstrap_ratings,
    bt_mle,
    fit_ratings,
    infer_baseline,
    leaderboard_frame,
    ratings_to_winrates,
)
from judge_audit.ranking.collapse import CollapseReport, collapse_analysis

__all__ = [
    "Battle",
    "CollapseReport",
    "Outcome",
    "RatingTable",
    "bootstrap_ratings",
    "bt_mle",
    "collapse_analysis",
    "fit_ratings",
    "infer_baseline",
    "judgments_to_battles",
    "leaderboard_frame",
    "ratings_to_winrates",
]
