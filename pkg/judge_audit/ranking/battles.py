from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from judge_audit.config.settings import (
    OVERALL,
    STRONG_PREFERENCE_WEIGHT,
    WEAK_PREFERENCE_WEIGHT,
)
from judge_audit.errors import InputError
from judge_audit.storage.judgment_state import JudgmentSet


class Outcome(str, Enum):
    WIN_A = "win_a"
    WIN_B = "win_b"
    TIE = "tie"


@dataclass(frozen=True)
class Battle:
    model_a: str
    model_b: str
    outcome: Outcome
    weight: float


_LIKERT_OUTCOMES = {
    1.0: (Outcome.WIN_A, STRONG_PREFERENCE_WEIGHT),
    2.0: (Outcome.WIN_A, WEAK_PREFERENCE_WEIGHT),
    3.0: (Outcome.TIE, WEAK_PREFERENCE_WEIGHT),
    4.0: (Outcome.WIN_B, WEAK_PREFERENCE_WEIGHT),
    5.0: (Outcome.WIN_B, STRONG_PREFERENCE_WEIGHT),
}


def judgments_to_battles(judgment_set: JudgmentSet, target: str = OVERALL) -> List[Battle]:
    """One weighted battle per record for ``target`` (a criterion or "overall").

    Decisive preferences weigh 3, weak ones and ties 1. Flagged verdicts read as ties.
    """
    if target not in judgment_set.fields:
        raise InputError(
            f"unknown battle target '{target}'; expected one of: {', '.join(judgment_set.fields)}"
        )
    battles = []
    for record in judgment_set.records:
        outcome, weight = _LIKERT_OUTCOMES[record.likert(target)]
        battles.append(Battle(record.model_a, record.model_b, outcome, weight))
    return battles


def battle_models(battles: Sequence[Battle]) -> List[str]:
    return sorted({m for b in battles for m in (b.model_a, b.model_b)})


def win_matrix(
    battles: Sequence[Battle], drop_ties: bool = False
) -> Tuple[List[str], np.ndarray]:
    """Weighted win counts: entry (i, j) is how much model i beat model j.

    A tie adds half its weight to each side unless ``drop_ties`` is set.
    """
    models = battle_models(battles)
    index = {m: i for i, m in enumerate(models)}
    wins = np.zeros((len(models), len(models)))
    for b in battles:
        a, c = index[b.model_a], index[b.model_b]
        if a == c:
            continue
        if b.outcome is Outcome.WIN_A:
            wins[a, c] += b.weight
        elif b.outcome is Outcome.WIN_B:
            wins[c, a] += b.weight
        elif not drop_ties:
            wins[a, c] += b.weight / 2.0
            wins[c, a] += b.weight / 2.0
    return models, wins
