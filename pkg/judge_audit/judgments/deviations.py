"""Deviation accounting: how often verdict extraction failed, per judge and setting."""

from typing import Sequence

import pandas as pd

from judge_audit.errors import InputError
from judge_audit.storage.judgment_state import JudgmentSet

GROUP_COLUMNS = ("judge", "setting")
AVERAGE_COLUMN = "Average"


def _flag_frame(judgment_set: JudgmentSet) -> pd.DataFrame:
    rows = [
        {
            "judge": r.judge,
            "setting": r.setting,
            **{name: int(r.is_flagged(name)) for name in judgment_set.fields},
        }
        for r in judgment_set.records
    ]
    return pd.DataFrame(rows, columns=[*GROUP_COLUMNS, *judgment_set.fields])


def _check_group_by(group_by: Sequence[str]) -> list[str]:
    unknown = [g for g in group_by if g not in GROUP_COLUMNS]
    if unknown:
        raise InputError(f"cannot group deviations by {unknown}; use judge and/or setting")
    return list(group_by)


def deviation_counts(
    judgment_set: JudgmentSet, group_by: Sequence[str] = GROUP_COLUMNS
) -> pd.DataFrame:
    """Flagged-field counts per group, including the overall verdict and the group size."""
    if len(judgment_set) == 0:
        raise InputError("deviation accounting needs at least one judgment")
    group_by = _check_group_by(group_by)
    frame = _flag_frame(judgment_set)
    fields = list(judgment_set.fields)
    if not group_by:
        counts = frame[fields].sum().to_frame().T
        counts.insert(0, "total", len(frame))
        return counts
    grouped = frame.groupby(group_by, sort=True)
    counts = grouped[fields].sum()
    counts.insert(0, "total", grouped.size())
    return counts.reset_index()


def deviation_rates(
    judgment_set: JudgmentSet, group_by: Sequence[str] = GROUP_COLUMNS
) -> pd.DataFrame:
    """Percentage of flagged verdicts per group and criterion, plus an Average column.

    Columns mirror the published deviation table: group keys, the criteria, Average.
    """
    counts = deviation_counts(judgment_set, group_by)
    criteria = list(judgment_set.criteria)
    rates = counts[list(group_by)].copy()
    for name in criteria:
        rates[name] = 100.0 * counts[name] / counts["total"]
    rates[AVERAGE_COLUMN] = rates[criteria].mean(axis=1)
    return rates
