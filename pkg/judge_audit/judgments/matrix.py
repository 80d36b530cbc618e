import numpy as np

from judge_audit.config.settings import OVERALL
from judge_audit.errors import InputError
from judge_audit.storage.judgment_state import JudgmentSet, SampleMatrix


def build_sample_matrix(judgment_set: JudgmentSet) -> SampleMatrix:
    """One row per record, verdicts on the 1-5 scale, flagged fields at the midpoint."""
    if len(judgment_set) == 0:
        raise InputError("cannot build a sample matrix from an empty judgment set")
    criteria = judgment_set.criteria
    records = judgment_set.records

    factors = np.array([[r.likert(c) for c in criteria] for r in records], dtype=float)
    overall = np.array([r.likert(OVERALL) for r in records], dtype=float)
    deviation_mask = np.array(
        [[r.is_flagged(name) for name in judgment_set.fields] for r in records], dtype=bool
    )
    return SampleMatrix(
        factors=factors,
        overall=overall,
        question_ids=tuple(r.question_id for r in records),
        imputed_mask=np.zeros((len(records), len(criteria) + 1), dtype=bool),
        criteria=tuple(criteria),
        observation_ids=tuple(r.observation_id for r in records),
        deviation_mask=deviation_mask,
    )


def without_deviations(sample: SampleMatrix) -> SampleMatrix:
    """Rows with no flagged field, for sensitivity runs that exclude deviations."""
    keep = np.flatnonzero(~sample.deviation_mask.any(axis=1))
    return sample.take(keep)
