"""Multiple imputation for incomplete judgments by chained equations.

Each imputation runs sklearn's IterativeImputer with posterior sampling, so missing cells get a
regression prediction from the observed columns plus residual noise. Per-imputation seeds are
spawned from one SeedSequence, which keeps results identical for any ``jobs`` value.
"""

import logging
from typing import List, Literal

import numpy as np
from joblib import Parallel, delayed
from sklearn.experimental import enable_iterative_imputer  # noqa: F401
from sklearn.impute import IterativeImputer

from judge_audit.config.settings import (
    DEFAULT_IMPUTATIONS,
    LIKERT_MAX,
    LIKERT_MIN,
    OVERALL,
    TIE_SCORE,
)
from judge_audit.errors import InputError
from judge_audit.judgments.matrix import build_sample_matrix
from judge_audit.storage.judgment_state import JudgmentSet, SampleMatrix

logger = logging.getLogger(__name__)

DeviationPolicy = Literal["tie", "missing"]


def _missing_mask(judgment_set: JudgmentSet, policy: DeviationPolicy) -> np.ndarray:
    m, width = len(judgment_set), len(judgment_set.fields)
    if policy == "tie":
        # Deviations are observed "no preference" judgments under this policy
        return np.zeros((m, width), dtype=bool)
    return np.array(
        [[r.is_flagged(name) for name in judgment_set.fields] for r in judgment_set.records],
        dtype=bool,
    )


def _impute_once(values: np.ndarray, seed: int, max_iter: int) -> np.ndarray:
    imputer = IterativeImputer(
        sample_posterior=True,
        max_iter=max_iter,
        random_state=seed,
        min_value=LIKERT_MIN,
        max_value=LIKERT_MAX,
        keep_empty_features=True,
    )
    filled = imputer.fit_transform(values)
    return np.clip(filled, LIKERT_MIN, LIKERT_MAX)


def impute_missing(
    judgment_set: JudgmentSet,
    imputations: int = DEFAULT_IMPUTATIONS,
    seed: int = 0,
    deviation_policy: DeviationPolicy = "tie",
    max_iter: int = 10,
    jobs: int = 1,
) -> List[SampleMatrix]:
    """Return ``imputations`` complete sample matrices with imputed cells marked."""
    if imputations < 1:
        raise InputError(f"imputations must be at least 1, got {imputations}")
    if len(judgment_set) == 0:
        raise InputError("cannot impute an empty judgment set")

    base = build_sample_matrix(judgment_set)
    missing = _missing_mask(judgment_set, deviation_policy)

    fully_missing = missing.all(axis=1)
    if fully_missing.any():
        logger.warning("dropping %d rows with every verdict missing", int(fully_missing.sum()))
        keep = np.flatnonzero(~fully_missing)
        if keep.size == 0:
            raise InputError("every judgment is fully missing; nothing to impute")
        base = base.take(keep)
        missing = missing[keep]

    if not missing.any():
        return [base for _ in range(imputations)]

    values = np.column_stack([base.factors, base.overall])
    values[missing] = np.nan
    empty_columns = missing.all(axis=0)
    if empty_columns.any():
        names = [n for n, e in zip((*base.criteria, OVERALL), empty_columns) if e]
        logger.warning("no observed values for %s; filling with the tie midpoint", names)
        values[:, empty_columns] = TIE_SCORE

    seeds = [
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(imputations)
    ]
    filled = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_impute_once)(values, s, max_iter) for s in seeds
    )
    logger.info("imputed %d cells across %d imputations", int(missing.sum()), imputations)
    return [
        SampleMatrix(
            factors=f[:, :-1],
            overall=f[:, -1],
            question_ids=base.question_ids,
            imputed_mask=missing.copy(),
            criteria=base.criteria,
            observation_ids=base.observation_ids,
            deviation_mask=base.deviation_mask,
        )
        for f in filled
    ]
