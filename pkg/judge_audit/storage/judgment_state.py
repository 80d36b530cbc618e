from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from judge_audit.config.settings import (
    LIKERT_MAX,
    LIKERT_MIN,
    OVERALL,
    RUBRIC_CRITERIA,
    SCORE_RANGE,
    TIE_SCORE,
)


class VerdictLabel(str, Enum):
    """Five-level pairwise preference; 1 favors assistant A, 5 favors assistant B."""

    MUCH_BETTER_A = "A>>B"
    BETTER_A = "A>B"
    TIE = "A=B"
    BETTER_B = "B>A"
    MUCH_BETTER_B = "B>>A"

    @property
    def bracketed(self) -> str:
        return f"[[{self.value}]]"

    @property
    def parenthesized(self) -> str:
        return f"(({self.value}))"

    @property
    def likert(self) -> float:
        return _LIKERT[self]

    @classmethod
    def coerce(cls, value: object) -> Optional["VerdictLabel"]:
        """Read a stored verdict in any of its accepted spellings; None when unreadable."""
        if value is None:
            return None
        if isinstance(value, VerdictLabel):
            return value
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return _FROM_LIKERT.get(float(value))
        text = str(value).strip()
        if not text:
            return None
        if text.startswith("[[") and text.endswith("]]"):
            text = text[2:-2]
        elif text.startswith("((") and text.endswith("))"):
            text = text[2:-2]
        text = text.replace(" ", "")
        try:
            return cls(text)
        except ValueError:
            pass
        key = text.replace("_", "").lower()
        return _BY_NAME.get(key)


_LIKERT = {
    VerdictLabel.MUCH_BETTER_A: 1.0,
    VerdictLabel.BETTER_A: 2.0,
    VerdictLabel.TIE: 3.0,
    VerdictLabel.BETTER_B: 4.0,
    VerdictLabel.MUCH_BETTER_B: 5.0,
}
_FROM_LIKERT = {score: label for label, score in _LIKERT.items()}
_BY_NAME = {
    "muchbettera": VerdictLabel.MUCH_BETTER_A,
    "bettera": VerdictLabel.BETTER_A,
    "tie": VerdictLabel.TIE,
    "betterb": VerdictLabel.BETTER_B,
    "muchbetterb": VerdictLabel.MUCH_BETTER_B,
}


class JudgmentRecord(BaseModel):
    """One pairwise judgment: factor verdicts, overall verdict and provenance."""

    question_id: str
    model_a: str
    model_b: str
    judge: str
    setting: str
    factor_verdicts: Dict[str, Optional[VerdictLabel]]
    overall_verdict: Optional[VerdictLabel] = None
    deviation_flags: Set[str] = Field(default_factory=set)
    raw_text: Optional[str] = None

    @model_validator(mode="after")
    def _flag_absent_verdicts(self) -> "JudgmentRecord":
        fields = set(self.factor_verdicts) | {OVERALL}
        unknown = self.deviation_flags - fields
        if unknown:
            raise ValueError(f"deviation flags name unknown fields: {sorted(unknown)}")
        absent = {name for name, verdict in self.factor_verdicts.items() if verdict is None}
        if self.overall_verdict is None:
            absent.add(OVERALL)
        self.deviation_flags = set(self.deviation_flags) | absent
        return self

    @property
    def observation_id(self) -> str:
        """Judgment series key used as the observation axis in reliability statistics."""
        return f"{self.model_a}|{self.model_b}|{self.judge}"

    def verdict(self, name: str) -> Optional[VerdictLabel]:
        if name == OVERALL:
            return self.overall_verdict
        return self.factor_verdicts[name]

    def is_flagged(self, name: str) -> bool:
        return name in self.deviation_flags

    def likert(self, name: str) -> float:
        """Numeric view of a verdict; a flagged field reads as "no preference"."""
        verdict = self.verdict(name)
        if self.is_flagged(name) or verdict is None:
            return TIE_SCORE
        return verdict.likert


class JudgmentSet(BaseModel):
    """Ordered judgments sharing one rubric."""

    records: List[JudgmentRecord]
    criteria: Tuple[str, ...] = RUBRIC_CRITERIA
    score_range: float = Field(default=SCORE_RANGE, gt=0)

    @model_validator(mode="after")
    def _check_criteria(self) -> "JudgmentSet":
        expected = set(self.criteria)
        if len(expected) != len(self.criteria):
            raise ValueError(f"criteria must be distinct: {list(self.criteria)}")
        for index, record in enumerate(self.records):
            keys = set(record.factor_verdicts)
            if keys != expected:
                raise ValueError(
                    f"record {index} criteria {sorted(keys)} do not match "
                    f"expected {list(self.criteria)}"
                )
        return self

    def __len__(self) -> int:
        return len(self.records)

    @property
    def fields(self) -> Tuple[str, ...]:
        return (*self.criteria, OVERALL)

    def models(self) -> List[str]:
        return sorted({m for r in self.records for m in (r.model_a, r.model_b)})

    def judges(self) -> List[str]:
        return sorted({r.judge for r in self.records})

    def settings(self) -> List[str]:
        return sorted({r.setting for r in self.records})

    def subset(self, rows: Iterable[int]) -> "JudgmentSet":
        """Records at the given positions, repeats allowed (bootstrap resamples)."""
        return JudgmentSet.model_construct(
            records=[self.records[i] for i in rows],
            criteria=self.criteria,
            score_range=self.score_range,
        )

    def filter(
        self,
        judge: Optional[str] = None,
        questions: Optional[Sequence[str]] = None,
        models: Optional[Sequence[str]] = None,
    ) -> "JudgmentSet":
        question_set = set(questions) if questions is not None else None
        model_set = set(models) if models is not None else None
        kept = [
            r
            for r in self.records
            if (judge is None or r.judge == judge)
            and (question_set is None or r.question_id in question_set)
            and (model_set is None or (r.model_a in model_set and r.model_b in model_set))
        ]
        return JudgmentSet.model_construct(
            records=kept, criteria=self.criteria, score_range=self.score_range
        )


@dataclass(frozen=True)
class SampleMatrix:
    """Numeric design matrix: factor scores f_ij, overall scores o_i, provenance per row."""

    factors: np.ndarray
    overall: np.ndarray
    question_ids: Tuple[str, ...]
    imputed_mask: np.ndarray
    criteria: Tuple[str, ...] = RUBRIC_CRITERIA
    observation_ids: Tuple[str, ...] = ()
    deviation_mask: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=bool))

    def __post_init__(self) -> None:
        m = self.factors.shape[0]
        if self.factors.ndim != 2 or self.factors.shape[1] != len(self.criteria):
            raise ValueError(
                f"factor matrix shape {self.factors.shape} does not match "
                f"{len(self.criteria)} criteria"
            )
        if self.overall.shape != (m,) or len(self.question_ids) != m:
            raise ValueError("row count must match overall scores and question ids")
        if self.imputed_mask.shape != (m, len(self.criteria) + 1):
            raise ValueError(f"imputed mask must be {m}x{len(self.criteria) + 1}")
        if not self.observation_ids:
            object.__setattr__(self, "observation_ids", tuple(self.question_ids))
        if self.deviation_mask.size == 0:
            object.__setattr__(self, "deviation_mask", np.zeros_like(self.imputed_mask))
        values = np.concatenate([self.factors.ravel(), self.overall])
        if values.size and (
            np.any(~np.isfinite(values))
            or values.min() < LIKERT_MIN
            or values.max() > LIKERT_MAX
        ):
            raise ValueError("sample entries must lie within [1, 5]")

    @property
    def m(self) -> int:
        return int(self.factors.shape[0])

    @property
    def k(self) -> int:
        return int(self.factors.shape[1])

    def take(self, rows: Sequence[int] | np.ndarray) -> "SampleMatrix":
        rows = np.asarray(rows, dtype=int)
        return SampleMatrix(
            factors=self.factors[rows],
            overall=self.overall[rows],
            question_ids=tuple(self.question_ids[i] for i in rows),
            imputed_mask=self.imputed_mask[rows],
            criteria=self.criteria,
            observation_ids=tuple(self.observation_ids[i] for i in rows),
            deviation_mask=self.deviation_mask[rows],
        )
