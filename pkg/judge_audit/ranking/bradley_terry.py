"""Weighted Bradley-Terry ratings fitted by penalized maximum likelihood.

Model: P(i beats j) = 1 / (1 + exp(-(r_i - r_j))), natural-log scale. The objective adds a weak
L2 penalty (1e-6) so the maximum exists even when one model wins every comparison. Each step is
a full Newton step when that raises the objective and otherwise a quadratic-bound
(minorize-maximize) step, which always does. Ratings are reported relative to a baseline model.
"""

import logging
from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, Field
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import expit, log_expit

from judge_audit.config.settings import (
    BT_MAX_ITER,
    BT_REGULARIZATION,
    BT_TOLERANCE,
    DEFAULT_CONFIDENCE_LEVEL,
    DEFAULT_RATING_BOOTSTRAP_ITERATIONS,
    ELO_OFFSET,
    ELO_SCALE,
    MAX_FAILED_BOOTSTRAP_FRACTION,
    OVERALL,
)
from judge_audit.errors import AuditError, InputError, NumericError
from judge_audit.ranking.battles import Battle, judgments_to_battles, win_matrix
from judge_audit.stats.bootstrap import percentile_interval, resample_rows
from judge_audit.storage.judgment_state import JudgmentSet

logger = logging.getLogger(__name__)

LEADERBOARD_COLUMNS = ["model", "rating", "elo_display", "win_rate", "ci_low", "ci_high"]


class RatingTable(BaseModel):
    """Ratings anchored at the baseline (rating 0), with optional win rates and intervals."""

    baseline: str
    ratings: Dict[str, float]
    win_rates: Dict[str, float] = Field(default_factory=dict)
    elo_display: Dict[str, float] = Field(default_factory=dict)
    ci: Dict[str, Tuple[float, float]] = Field(default_factory=dict)
    iterations: int = 0
    solver_iterations: int = 0
    separated: bool = False

    def models(self) -> List[str]:
        return sorted(self.ratings, key=lambda m: (-self.ratings[m], m))


def _objective(theta: np.ndarray, wins: np.ndarray, epsilon: float) -> float:
    diff = theta[:, None] - theta[None, :]
    return float((wins * log_expit(diff)).sum() - 0.5 * epsilon * theta @ theta)


def _gradient(theta: np.ndarray, wins: np.ndarray, totals: np.ndarray, epsilon: float):
    p = expit(theta[:, None] - theta[None, :])
    gradient = (wins - totals * p).sum(axis=1) - epsilon * theta
    return gradient, p


def _laplacian(weights: np.ndarray) -> np.ndarray:
    return np.diag(weights.sum(axis=1)) - weights


def _check_connected(models: Sequence[str], totals: np.ndarray) -> None:
    count, labels = connected_components(csr_matrix(totals > 0), directed=False)
    if count > 1:
        components = [
            sorted(models[i] for i in np.flatnonzero(labels == c)) for c in range(count)
        ]
        raise NumericError(f"comparison graph is disconnected: components {components}")


def _is_separated(wins: np.ndarray) -> bool:
    count, _ = connected_components(csr_matrix(wins > 0), directed=True, connection="strong")
    return count > 1


def bt_mle(
    battles: Sequence[Battle],
    baseline: str,
    tolerance: float = BT_TOLERANCE,
    max_iter: int = BT_MAX_ITER,
    drop_ties: bool = False,
    regularization: float = BT_REGULARIZATION,
) -> RatingTable:
    """Ratings maximizing the weighted, weakly penalized Bradley-Terry log-likelihood.

    Converges when the largest rating change is below ``tolerance``. A disconnected comparison
    graph has no common scale and raises. When the graph is connected but not strongly
    connected (some group never loses to the rest) the unpenalized maximum does not exist;
    the fit is then bounded by the penalty and flagged ``separated``.
    """
    if not battles:
        raise InputError("no battles to rate")
    models, wins = win_matrix(battles, drop_ties)
    if baseline not in models:
        raise InputError(f"baseline model '{baseline}' does not appear in any battle")
    totals = wins + wins.T
    _check_connected(models, totals)
    separated = _is_separated(wins)
    if separated:
        logger.warning("some models never lose to the rest; ratings are capped by the penalty")

    n = len(models)
    identity = np.eye(n)
    bound = _laplacian(totals) / 4.0 + regularization * identity
    theta = np.zeros(n)
    current = _objective(theta, wins, regularization)
    for iteration in range(1, max_iter + 1):
        gradient, p = _gradient(theta, wins, totals, regularization)
        curvature = _laplacian(totals * p * p.T) + regularization * identity
        step = np.linalg.solve(curvature, gradient)
        candidate = _objective(theta + step, wins, regularization)
        if not candidate >= current:
            step = np.linalg.solve(bound, gradient)
            candidate = _objective(theta + step, wins, regularization)
        theta = theta + step
        current = max(current, candidate)
        if np.max(np.abs(step)) < tolerance:
            break
    else:
        residual = float(np.max(np.abs(_gradient(theta, wins, totals, regularization)[0])))
        raise NumericError(
            f"Bradley-Terry fit did not converge in {max_iter} iterations "
            f"(score residual {residual:.3g})"
        )

    anchored = theta - theta[models.index(baseline)]
    return RatingTable(
        baseline=baseline,
        ratings={m: float(r) for m, r in zip(models, anchored)},
        solver_iterations=iteration,
        separated=separated,
    )


def ratings_to_winrates(table: RatingTable, baseline: Optional[str] = None) -> RatingTable:
    """Win probability against ``baseline`` and the display-only ELO view of each rating."""
    baseline = baseline or table.baseline
    if baseline not in table.ratings:
        raise InputError(f"baseline model '{baseline}' has no rating")
    reference = table.ratings[baseline]
    return table.model_copy(
        update={
            "win_rates": {m: float(expit(r - reference)) for m, r in table.ratings.items()},
            "elo_display": {m: ELO_OFFSET + r * ELO_SCALE for m, r in table.ratings.items()},
        }
    )


def infer_baseline(judgment_set: JudgmentSet) -> str:
    """The model present in the most records; ties resolve alphabetically."""
    if len(judgment_set) == 0:
        raise InputError("cannot infer a baseline from an empty judgment set")
    counts = Counter(m for r in judgment_set.records for m in {r.model_a, r.model_b})
    return min(counts, key=lambda m: (-counts[m], m))


def fit_ratings(
    judgment_set: JudgmentSet,
    target: str = OVERALL,
    baseline: Optional[str] = None,
    drop_ties: bool = False,
) -> RatingTable:
    baseline = baseline or infer_baseline(judgment_set)
    battles = judgments_to_battles(judgment_set, target)
    return ratings_to_winrates(bt_mle(battles, baseline, drop_ties=drop_ties))


def _resampled_ratings(
    judgment_set: JudgmentSet,
    target: str,
    baseline: str,
    drop_ties: bool,
    seed: int,
    iteration: int,
    models: Sequence[str],
) -> Optional[np.ndarray]:
    rows = resample_rows(len(judgment_set), seed, iteration)
    try:
        battles = judgments_to_battles(judgment_set.subset(rows), target)
        table = bt_mle(battles, baseline, drop_ties=drop_ties)
    except AuditError:
        return None
    if set(table.ratings) != set(models):
        return None
    return np.array([table.ratings[m] for m in models])


def bootstrap_ratings(
    judgment_set: JudgmentSet,
    target: str = OVERALL,
    iterations: int = DEFAULT_RATING_BOOTSTRAP_ITERATIONS,
    seed: int = 0,
    baseline: Optional[str] = None,
    level: float = DEFAULT_CONFIDENCE_LEVEL,
    drop_ties: bool = False,
    jobs: int = 1,
) -> RatingTable:
    """Point ratings on the full set plus percentile intervals from resampled records."""
    if iterations < 1:
        raise InputError(f"bootstrap iterations must be at least 1, got {iterations}")
    point = fit_ratings(judgment_set, target, baseline, drop_ties)
    models = sorted(point.ratings)
    draws = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_resampled_ratings)(
            judgment_set, target, point.baseline, drop_ties, seed, i, models
        )
        for i in range(iterations)
    )
    samples = [d for d in draws if d is not None]
    failed = iterations - len(samples)
    if failed > MAX_FAILED_BOOTSTRAP_FRACTION * iterations:
        raise NumericError(
            f"rating bootstrap failed in {failed} of {iterations} iterations "
            "(disconnected resamples); collect more judgments per model pair"
        )
    if failed:
        logger.warning("rating bootstrap skipped %d of %d draws", failed, iterations)
    stacked = np.vstack(samples)
    ci = {m: percentile_interval(stacked[:, i], level) for i, m in enumerate(models)}
    return point.model_copy(update={"ci": ci, "iterations": iterations})


def leaderboard_frame(table: RatingTable) -> pd.DataFrame:
    """model, rating, elo_display, win_rate, ci_low, ci_high; best model first."""
    table = table if table.win_rates else ratings_to_winrates(table)
    rows = []
    for model in table.models():
        low, high = table.ci.get(model, (float("nan"), float("nan")))
        rows.append(
            {
                "model": model,
                "rating": table.ratings[model],
                "elo_display": table.elo_display[model],
                "win_rate": table.win_rates[model],
                "ci_low": low,
                "ci_high": high,
            }
        )
    return pd.DataFrame(rows, columns=LEADERBOARD_COLUMNS)
