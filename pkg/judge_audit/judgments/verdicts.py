"""Verdict extraction from raw judge text.

Factor verdicts use the ``Criterion: ((A>B))`` form, overall verdicts the ``[[A>B]]`` form.
Judges often restate their verdicts, so the last match wins.
"""

import re
from enum import Enum
from typing import Optional

from judge_audit.storage.judgment_state import VerdictLabel

_LABEL = r"(A\s*>>\s*B|A\s*>\s*B|A\s*=\s*B|B\s*>>\s*A|B\s*>\s*A)"

OVERALL_PATTERN = re.compile(r"\[\[\s*" + _LABEL + r"\s*\]\]")
ANY_FACTOR_PATTERN = re.compile(r"\(\(\s*" + _LABEL + r"\s*\)\)")


class VerdictMarker(str, Enum):
    FACTOR_PARENS = "factor"
    OVERALL_BRACKETS = "overall"


def _factor_pattern(criterion: str) -> re.Pattern[str]:
    # Tolerates markdown emphasis around the criterion name: "**Safety**: ((A=B))"
    return re.compile(
        r"[*_]*" + re.escape(criterion) + r"[*_]*\s*:\s*[*_]*\s*\(\(\s*" + _LABEL + r"\s*\)\)",
        re.IGNORECASE,
    )


def parse_verdict(
    text: Optional[str],
    marker: VerdictMarker,
    criterion: Optional[str] = None,
) -> Optional[VerdictLabel]:
    """Return the last labeled verdict for the marker, or None when there is none.

    Absence is the deviation signal; callers record it rather than raising.
    """
    if not text:
        return None
    if marker is VerdictMarker.OVERALL_BRACKETS:
        pattern = OVERALL_PATTERN
    elif criterion is None:
        pattern = ANY_FACTOR_PATTERN
    else:
        pattern = _factor_pattern(criterion)
    matches = pattern.findall(text)
    if not matches:
        return None
    return VerdictLabel(re.sub(r"\s+", "", matches[-1]))


def verdict_to_likert(label: VerdictLabel) -> float:
    """MuchBetterA->1, BetterA->2, Tie->3, BetterB->4, MuchBetterB->5."""
    return label.likert
