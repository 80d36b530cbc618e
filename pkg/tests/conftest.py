import json
from pathlib import Path
from typing import Callable, Dict, Iterable, Optional

import numpy as np
import pytest

from judge_audit.config.setting_spec import MetricOptions, SettingSpec
from judge_audit.config.settings import RUBRIC_CRITERIA
from judge_audit.storage.files import write_judgments
from judge_audit.storage.judgment_state import (
    JudgmentRecord,
    JudgmentSet,
    SampleMatrix,
    VerdictLabel,
)
from judge_audit.synth.generator import SyntheticConfig, generate
from judge_audit.workflows.audit import AuditReport, run_audit


@pytest.fixture
def make_record() -> Callable[..., JudgmentRecord]:
    """Record factory; every factor defaults to a tie unless overridden by name."""

    def factory(
        question_id: str = "q1",
        model_a: str = "model-a",
        model_b: str = "model-b",
        overall: Optional[VerdictLabel] = VerdictLabel.TIE,
        judge: str = "judge-1",
        setting: str = "setting1",
        **factors: Optional[VerdictLabel],
    ) -> JudgmentRecord:
        verdicts: Dict[str, Optional[VerdictLabel]] = {c: VerdictLabel.TIE for c in RUBRIC_CRITERIA}
        verdicts.update(factors)
        return JudgmentRecord(
            question_id=question_id,
            model_a=model_a,
            model_b=model_b,
            judge=judge,
            setting=setting,
            factor_verdicts=verdicts,
            overall_verdict=overall,
        )

    return factory


@pytest.fixture
def make_sample() -> Callable[..., SampleMatrix]:
    """SampleMatrix from raw factor and overall arrays, one question per row by default."""

    def factory(
        factors: np.ndarray,
        overall: np.ndarray,
        question_ids: Optional[Iterable[str]] = None,
        observation_ids: Optional[Iterable[str]] = None,
        criteria: Optional[Iterable[str]] = None,
    ) -> SampleMatrix:
        factors = np.asarray(factors, dtype=float)
        m, k = factors.shape
        names = tuple(criteria) if criteria is not None else tuple(f"f{j + 1}" for j in range(k))
        questions = tuple(question_ids) if question_ids is not None else tuple(
            f"q{i:04d}" for i in range(m)
        )
        return SampleMatrix(
            factors=factors,
            overall=np.asarray(overall, dtype=float),
            question_ids=questions,
            imputed_mask=np.zeros((m, k + 1), dtype=bool),
            criteria=names,
            observation_ids=tuple(observation_ids) if observation_ids is not None else (),
        )

    return factory


@pytest.fixture
def write_jsonl(tmp_path: Path) -> Callable[[Iterable[dict], str], Path]:
    def writer(rows: Iterable[dict], name: str = "judgments.jsonl") -> Path:
        path = tmp_path / name
        path.write_text("".join(json.dumps(row) + "\n" for row in rows), encoding="utf-8")
        return path

    return writer


@pytest.fixture(scope="session")
def synthetic_pair() -> tuple:
    """Small set with persistent series effects, enough for every audit stage."""
    config = SyntheticConfig(
        questions=60,
        models=8,
        series_share=0.5,
        noise_sigma=0.5,
        transitive_quality=[0.0, 0.4, 0.8, -0.3, 0.2, 0.6, -0.5, 1.0],
        seed=7,
    )
    return generate(config)


@pytest.fixture(scope="session")
def synthetic_set(synthetic_pair) -> JudgmentSet:
    return synthetic_pair[0]


@pytest.fixture(scope="session")
def synthetic_path(tmp_path_factory, synthetic_set) -> Path:
    return write_judgments(
        synthetic_set.records, tmp_path_factory.mktemp("data") / "judgments.jsonl"
    )


@pytest.fixture(scope="session")
def audit_setting() -> SettingSpec:
    """Small resample counts; the full defaults are exercised by the slow tests."""
    metric = MetricOptions(imputations=2, bootstrap_iterations=50, rating_bootstrap_iterations=20)
    return SettingSpec(name="synthetic", metric=metric)


@pytest.fixture(scope="session")
def synthetic_report(audit_setting, synthetic_path) -> AuditReport:
    return run_audit(audit_setting, synthetic_path)
