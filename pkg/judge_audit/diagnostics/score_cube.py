import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd

from judge_audit.errors import InputError
from judge_audit.storage.judgment_state import SampleMatrix

logger = logging.getLogger(__name__)

MIN_QUESTIONS = 2
MIN_OBSERVATIONS = 3


@dataclass(frozen=True)
class ScoreCube:
    """Factor x question x observation-series scores; NaN where a series skipped a question.

    Observation series are (model_a, model_b, judge) triples, so the variance a reliability
    statistic measures is the variance across judged model pairs for a fixed question.
    """

    values: np.ndarray
    criteria: Tuple[str, ...]
    questions: Tuple[str, ...]
    observations: Tuple[str, ...]

    def __post_init__(self) -> None:
        expected = (len(self.criteria), len(self.questions), len(self.observations))
        if self.values.shape != expected:
            raise InputError(f"cube shape {self.values.shape} does not match axes {expected}")

    @classmethod
    def from_sample(cls, sample: SampleMatrix) -> "ScoreCube":
        """Pivot a sample matrix; repeated (question, series) judgments are averaged."""
        frame = pd.DataFrame(sample.factors, columns=list(sample.criteria))
        frame["question_id"] = sample.question_ids
        frame["observation_id"] = sample.observation_ids
        table = frame.pivot_table(
            index="question_id",
            columns="observation_id",
            values=list(sample.criteria),
            aggfunc="mean",
            dropna=False,
        )
        questions = tuple(sorted(set(sample.question_ids)))
        observations = tuple(sorted(set(sample.observation_ids)))
        values = np.stack(
            [
                table[name].reindex(index=list(questions), columns=list(observations)).to_numpy()
                for name in sample.criteria
            ]
        )
        return cls(values.astype(float), tuple(sample.criteria), questions, observations)

    @property
    def k(self) -> int:
        return len(self.criteria)

    @property
    def n(self) -> int:
        return len(self.questions)

    @property
    def r(self) -> int:
        return len(self.observations)

    def complete(self) -> "ScoreCube":
        """Drop observation series missing any cell, so every item shares the same cases."""
        keep = ~np.isnan(self.values).any(axis=(0, 1))
        if keep.all():
            return self
        logger.info("dropping %d incomplete observation series", int((~keep).sum()))
        return ScoreCube(
            values=self.values[:, :, keep],
            criteria=self.criteria,
            questions=self.questions,
            observations=tuple(o for o, kept in zip(self.observations, keep) if kept),
        )

    def check_reliability_shape(self) -> None:
        if self.n < MIN_QUESTIONS or self.r < MIN_OBSERVATIONS:
            raise InputError(
                f"reliability needs at least {MIN_QUESTIONS} questions and {MIN_OBSERVATIONS} "
                f"complete observation series, got {self.n} and {self.r}"
            )

    def items(self, factor: int) -> np.ndarray:
        """Observation x question matrix for one factor (cases in rows, items in columns)."""
        return self.values[factor].T

    def pooled(self) -> pd.DataFrame:
        """Each factor flattened over question x observation, one column per factor."""
        return pd.DataFrame(
            {name: self.values[i].ravel() for i, name in enumerate(self.criteria)}
        )
