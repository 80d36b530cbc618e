"""Collapse analysis: how much of the overall leaderboard the factor leaderboards explain.

Ratings aggregate many judgments into one number per model, which averages away the judgment
noise the schematic fit measures. Regressing overall ratings on factor ratings across models
therefore tends to give an R² near 1 even when the per-judgment R² is modest.
"""

import logging
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from judge_audit.config.settings import OVERALL, POLYNOMIAL_DEGREE
from judge_audit.diagnostics.schematic import fit_linear_arrays, fit_polynomial_arrays
from judge_audit.errors import NumericError
from judge_audit.ranking.bradley_terry import RatingTable, fit_ratings, infer_baseline
from judge_audit.storage.judgment_state import JudgmentSet

logger = logging.getLogger(__name__)


class CollapseReport(BaseModel):
    models: List[str]
    baseline: str
    per_factor_ratings: Dict[str, RatingTable]
    overall_ratings: RatingTable
    r2_linear: float
    r2_polynomial: Optional[float] = None
    r2_collapse: float
    unexplained_percent: float
    linear_weights: Dict[str, float]


def collapse_analysis(
    judgment_set: JudgmentSet,
    baseline: Optional[str] = None,
    drop_ties: bool = False,
    degree: int = POLYNOMIAL_DEGREE,
) -> CollapseReport:
    """Rate every factor and the overall verdict, then regress across models.

    One regression row per model. The polynomial fit is skipped (reported as None) when there
    are too few models for the full second-order design.
    """
    criteria = judgment_set.criteria
    baseline = baseline or infer_baseline(judgment_set)
    models = judgment_set.models()
    if len(models) < len(criteria) + 2:
        raise NumericError(
            f"insufficient models for collapse regression: {len(models)} models, "
            f"need at least {len(criteria) + 2}"
        )

    per_factor = {
        name: fit_ratings(judgment_set, name, baseline, drop_ties) for name in criteria
    }
    overall = fit_ratings(judgment_set, OVERALL, baseline, drop_ties)

    design = np.array([[per_factor[name].ratings[m] for name in criteria] for m in models])
    target = np.array([overall.ratings[m] for m in models])
    linear = fit_linear_arrays(design, target, criteria)
    try:
        r2_polynomial: Optional[float] = fit_polynomial_arrays(
            design, target, criteria, degree
        ).r_squared
    except NumericError as exc:
        logger.info("skipping polynomial collapse fit: %s", exc.message)
        r2_polynomial = None

    r2_collapse = linear.r_squared
    if r2_polynomial is not None:
        r2_collapse = max(r2_collapse, r2_polynomial)
    return CollapseReport(
        models=models,
        baseline=baseline,
        per_factor_ratings=per_factor,
        overall_ratings=overall,
        r2_linear=linear.r_squared,
        r2_polynomial=r2_polynomial,
        r2_collapse=r2_collapse,
        unexplained_percent=100.0 * (1.0 - r2_collapse),
        linear_weights=linear.coefficient_map(),
    )


def collapse_frame(report: CollapseReport) -> pd.DataFrame:
    """model, overall_rating and one rating column per factor."""
    frame = pd.DataFrame({"model": report.models})
    frame["overall_rating"] = [report.overall_ratings.ratings[m] for m in report.models]
    for name, table in report.per_factor_ratings.items():
        frame[name] = [table.ratings[m] for m in report.models]
    return frame
