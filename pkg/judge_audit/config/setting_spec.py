"""Audit settings files.

A setting is one evaluation configuration: which judge, rubric, questions and models to audit,
the baseline for ratings, and the options of every metric. Files are YAML, for example::

    name: gpt-judge-v1
    judge: gpt-4o-mini
    baseline: gpt-4-0314
    criteria: [Correctness, Completeness, Safety, Conciseness, Style]
    models: [gpt-4-0314, llama-3-8b, opt-125m]
    metric:
      imputations: 5
      bootstrap_iterations: 1000
      clusters: 4
      tie_policy: split
"""

from pathlib import Path
from typing import List, Literal, Optional

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator

from judge_audit.config.settings import (
    DEFAULT_BOOTSTRAP_ITERATIONS,
    DEFAULT_CONFIDENCE_LEVEL,
    DEFAULT_IMPUTATIONS,
    DEFAULT_RATING_BOOTSTRAP_ITERATIONS,
    POLYNOMIAL_DEGREE,
    RUBRIC_CRITERIA,
    SCORE_RANGE,
)
from judge_audit.errors import InputError


class MetricOptions(BaseModel):
    imputations: int = Field(default=DEFAULT_IMPUTATIONS, ge=1)
    seed: int = 0
    bootstrap_iterations: int = Field(default=DEFAULT_BOOTSTRAP_ITERATIONS, ge=0)
    rating_bootstrap_iterations: int = Field(default=DEFAULT_RATING_BOOTSTRAP_ITERATIONS, ge=0)
    confidence_level: float = Field(default=DEFAULT_CONFIDENCE_LEVEL, gt=0, lt=1)
    clusters: Optional[int] = Field(default=None, ge=2)
    polynomial_degree: int = Field(default=POLYNOMIAL_DEGREE, ge=1)
    tie_policy: Literal["split", "drop"] = "split"
    cs_ordered_pairs: bool = False
    deviation_policy: Literal["tie", "missing"] = "tie"
    exclude_deviations: bool = False

    @property
    def drop_ties(self) -> bool:
        return self.tie_policy == "drop"


class SettingSpec(BaseModel):
    name: str = Field(min_length=1)
    judge: Optional[str] = None
    criteria: List[str] = Field(default_factory=lambda: list(RUBRIC_CRITERIA))
    questions: Optional[List[str]] = None
    models: Optional[List[str]] = None
    baseline: Optional[str] = None
    score_range: float = Field(default=SCORE_RANGE, gt=0)
    metric: MetricOptions = Field(default_factory=MetricOptions)

    @field_validator("criteria")
    @classmethod
    def _distinct_criteria(cls, criteria: List[str]) -> List[str]:
        if len(criteria) < 2:
            raise ValueError("a rubric needs at least 2 criteria")
        if len(set(criteria)) != len(criteria):
            raise ValueError("criteria must be distinct")
        return criteria


def load_setting(path: str | Path) -> SettingSpec:
    path = Path(path)
    if not path.exists():
        raise InputError(f"settings file not found: {path}")
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise InputError(f"{path}: malformed YAML: {e}") from e
    if not isinstance(document, dict):
        raise InputError(f"{path}: expected a mapping at the top level")
    document.setdefault("name", path.stem)
    try:
        return SettingSpec(**document)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "document"
        raise InputError(f"{path}: key '{key}': {first['msg']}") from e
