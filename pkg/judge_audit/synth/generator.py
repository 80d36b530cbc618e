"""Synthetic pairwise judgments with known ground truth.

Each judgment draws latent traits from standard normals and maps them to continuous factor
scores through a loading matrix, so factor covariance is L L^T. The overall score follows a
known linear schema with optional interactions and Gaussian noise. Scores are then cut into
five Likert bins at fixed quantiles of their generating distribution.

Records compare the baseline "model-00" against every other model on every question. With
``transitive_quality`` set, each pair's quality gap shifts all factor means so that judgments
agree with one model ordering. ``series_share`` makes part of the latent draw persist across
questions within one (pair, judge) series, which gives reliability statistics signal to find.
"""

import logging
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from judge_audit.config.settings import OVERALL, RUBRIC_CRITERIA, SCORE_RANGE
from judge_audit.errors import InputError
from judge_audit.storage.files import canonical_json, write_atomic, write_judgments
from judge_audit.storage.judgment_state import JudgmentRecord, JudgmentSet, VerdictLabel

logger = logging.getLogger(__name__)

BIN_CUTS = (-0.84, -0.25, 0.25, 0.84)
COLLAPSE_CORRELATION = 0.85
SYNTHETIC_JUDGE = "synthetic-judge"

_LIKERT_LABELS = [
    VerdictLabel.MUCH_BETTER_A,
    VerdictLabel.BETTER_A,
    VerdictLabel.TIE,
    VerdictLabel.BETTER_B,
    VerdictLabel.MUCH_BETTER_B,
]


class HtmtRegime(str, Enum):
    SEPARABLE = "separable"
    COLLAPSED = "collapsed"


class SyntheticConfig(BaseModel):
    k: int = Field(default=len(RUBRIC_CRITERIA), ge=1)
    questions: int = Field(default=100, ge=2)
    models: int = Field(default=8, ge=2)
    true_weights: Optional[List[float]] = None
    intercept: float = 0.0
    noise_sigma: float = Field(default=1.0, ge=0)
    latent_dim: Optional[int] = None
    factor_loadings: Optional[List[List[float]]] = None
    interaction_terms: List[Tuple[int, int, float]] = Field(default_factory=list)
    transitive_quality: Optional[List[float]] = None
    series_share: float = Field(default=0.0, ge=0, lt=1)
    missing_rate: float = Field(default=0.0, ge=0, lt=1)
    seed: int = 0
    setting: str = "synthetic"

    @field_validator("interaction_terms")
    @classmethod
    def _coerce_terms(cls, terms: List[Tuple[int, int, float]]) -> List[Tuple[int, int, float]]:
        return [(int(j), int(l), float(c)) for j, l, c in terms]

    @model_validator(mode="after")
    def _check_shapes(self) -> "SyntheticConfig":
        if self.latent_dim is None:
            self.latent_dim = self.k
        if not 1 <= self.latent_dim <= self.k:
            raise ValueError(f"latent_dim must lie in [1, {self.k}], got {self.latent_dim}")
        if self.true_weights is None:
            self.true_weights = [1.0 / self.k] * self.k
        if len(self.true_weights) != self.k:
            raise ValueError(f"true_weights has {len(self.true_weights)} entries for k={self.k}")
        if self.factor_loadings is not None:
            shape = np.asarray(self.factor_loadings, dtype=float).shape
            if shape != (self.k, self.latent_dim):
                raise ValueError(
                    f"factor_loadings must be {self.k}x{self.latent_dim}, got {shape}"
                )
        for j, l, _ in self.interaction_terms:
            if not (0 <= j < self.k and 0 <= l < self.k):
                raise ValueError(f"interaction ({j}, {l}) is outside factors 0..{self.k - 1}")
        if self.transitive_quality is not None and len(self.transitive_quality) != self.models:
            raise ValueError(
                f"transitive_quality has {len(self.transitive_quality)} entries "
                f"for {self.models} models"
            )
        return self

    @property
    def criteria(self) -> Tuple[str, ...]:
        if self.k == len(RUBRIC_CRITERIA):
            return RUBRIC_CRITERIA
        return tuple(f"factor_{j + 1}" for j in range(self.k))

    @property
    def model_names(self) -> List[str]:
        return [f"model-{i:02d}" for i in range(self.models)]

    def loadings(self) -> np.ndarray:
        """Configured loadings, or factor j loading 1 on latent j mod latent_dim."""
        if self.factor_loadings is not None:
            matrix = np.asarray(self.factor_loadings, dtype=float)
        else:
            matrix = np.zeros((self.k, self.latent_dim))
            matrix[np.arange(self.k), np.arange(self.k) % self.latent_dim] = 1.0
        if not np.any(matrix):
            raise InputError("degenerate loadings: the loading matrix is all zeros")
        empty = np.flatnonzero(~matrix.any(axis=1))
        if empty.size:
            # An all-zero row is a constant factor
            raise InputError(
                f"degenerate loadings: factors {empty.tolist()} load on no latent trait"
            )
        return matrix

    def shifts(self) -> np.ndarray:
        """Quality gap of each compared pair (model-00 vs model-i), one per series."""
        if self.transitive_quality is None:
            return np.zeros(self.models - 1)
        quality = np.asarray(self.transitive_quality, dtype=float)
        return quality[1:] - quality[0]


class GroundTruth(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    analytic_r2: float
    expected_factor_correlation: List[List[float]]
    expected_htmt_regime: HtmtRegime
    config: SyntheticConfig
    continuous_factors: Optional[np.ndarray] = Field(default=None, exclude=True)
    continuous_overall: Optional[np.ndarray] = Field(default=None, exclude=True)


def factor_covariance(config: SyntheticConfig) -> np.ndarray:
    """L L^T for one judgment, before any quality shift."""
    loadings = config.loadings()
    return loadings @ loadings.T


def _interaction_matrix(config: SyntheticConfig) -> np.ndarray:
    """Symmetric A with f^T A f equal to the sum of the interaction terms."""
    matrix = np.zeros((config.k, config.k))
    for j, l, coefficient in config.interaction_terms:
        matrix[j, l] += coefficient / 2.0
        matrix[l, j] += coefficient / 2.0
    return matrix


def _signal_moments(config: SyntheticConfig, shift: float) -> Tuple[float, float]:
    """Mean and variance of b0 + b^T f + f^T A f for f ~ N(shift * 1, Sigma)."""
    sigma = factor_covariance(config)
    beta = np.asarray(config.true_weights, dtype=float)
    quad = _interaction_matrix(config)
    mu = np.full(config.k, shift)
    mean = config.intercept + beta @ mu + mu @ quad @ mu + np.trace(quad @ sigma)
    gradient = beta + 2.0 * quad @ mu
    variance = gradient @ sigma @ gradient + 2.0 * np.trace(quad @ sigma @ quad @ sigma)
    return float(mean), float(variance)


def _signal_distribution(config: SyntheticConfig) -> Tuple[float, float]:
    """Mean and variance of the noiseless overall score, mixing over pair shifts."""
    moments = np.array([_signal_moments(config, s) for s in config.shifts()])
    means, variances = moments[:, 0], moments[:, 1]
    return float(means.mean()), float(variances.mean() + means.var())


def analytic_r2(config: SyntheticConfig) -> float:
    """Population R² of the continuous overall score on the continuous factors."""
    if config.noise_sigma == 0:
        return 1.0
    _, signal = _signal_distribution(config)
    return signal / (signal + config.noise_sigma**2)


def expected_factor_correlation(config: SyntheticConfig) -> np.ndarray:
    covariance = factor_covariance(config) + config.shifts().var()
    scale = np.sqrt(np.diag(covariance))
    return covariance / np.outer(scale, scale)


def discretize(values: np.ndarray, mean: float, sd: float) -> np.ndarray:
    """Likert 1-5 from fixed quantile cuts of N(mean, sd)."""
    cuts = mean + sd * np.asarray(BIN_CUTS)
    return np.digitize(values, cuts) + 1


def _raw_text(labels: Dict[str, Optional[VerdictLabel]]) -> str:
    lines = [
        f"{name}: {label.parenthesized}"
        for name, label in labels.items()
        if name != OVERALL and label is not None
    ]
    overall = labels.get(OVERALL)
    if overall is not None:
        lines.append(f"My final verdict is: {overall.bracketed}")
    return "\n".join(lines)


def generate(config: SyntheticConfig) -> Tuple[JudgmentSet, GroundTruth]:
    """Judgment set and ground truth for ``config``; identical seeds give identical output."""
    rng = np.random.default_rng(config.seed)
    loadings = config.loadings()
    criteria = config.criteria
    models = config.model_names
    series_shifts = config.shifts()
    series_count = len(models) - 1
    m = config.questions * series_count

    series = np.tile(np.arange(series_count), config.questions)
    question_index = np.repeat(np.arange(config.questions), series_count)
    persistent = rng.standard_normal((series_count, config.latent_dim))
    fresh = rng.standard_normal((m, config.latent_dim))
    share = config.series_share
    latent = np.sqrt(share) * persistent[series] + np.sqrt(1.0 - share) * fresh

    shift = series_shifts[series]
    factors = latent @ loadings.T + shift[:, None]

    beta = np.asarray(config.true_weights, dtype=float)
    overall = config.intercept + factors @ beta
    for j, l, coefficient in config.interaction_terms:
        overall = overall + coefficient * factors[:, j] * factors[:, l]
    overall = overall + rng.normal(0.0, config.noise_sigma, size=m)

    factor_sd = np.sqrt(np.diag(factor_covariance(config)) + series_shifts.var())
    factor_likert = np.column_stack(
        [
            discretize(factors[:, j], series_shifts.mean(), factor_sd[j])
            for j in range(config.k)
        ]
    )
    signal_mean, signal_variance = _signal_distribution(config)
    overall_likert = discretize(
        overall, signal_mean, float(np.sqrt(signal_variance + config.noise_sigma**2))
    )
    missing = rng.random((m, config.k + 1)) < config.missing_rate

    records = []
    for row in range(m):
        labels: Dict[str, Optional[VerdictLabel]] = {
            name: None if missing[row, j] else _LIKERT_LABELS[factor_likert[row, j] - 1]
            for j, name in enumerate(criteria)
        }
        overall_label = None if missing[row, -1] else _LIKERT_LABELS[overall_likert[row] - 1]
        records.append(
            JudgmentRecord(
                question_id=f"q{question_index[row]:04d}",
                model_a=models[0],
                model_b=models[series[row] + 1],
                judge=SYNTHETIC_JUDGE,
                setting=config.setting,
                factor_verdicts=labels,
                overall_verdict=overall_label,
                raw_text=_raw_text({**labels, OVERALL: overall_label}),
            )
        )

    correlation = expected_factor_correlation(config)
    off_diagonal = correlation[np.triu_indices(config.k, k=1)]
    collapsed = off_diagonal.size > 0 and off_diagonal.mean() >= COLLAPSE_CORRELATION
    truth = GroundTruth(
        analytic_r2=analytic_r2(config),
        expected_factor_correlation=correlation.tolist(),
        expected_htmt_regime=HtmtRegime.COLLAPSED if collapsed else HtmtRegime.SEPARABLE,
        config=config,
        continuous_factors=factors,
        continuous_overall=overall,
    )
    logger.info("generated %d synthetic judgments (analytic R² %.3f)", m, truth.analytic_r2)
    judgment_set = JudgmentSet(records=records, criteria=criteria, score_range=SCORE_RANGE)
    return judgment_set, truth


def truth_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_suffix(".truth.json")


def write_synthetic(judgment_set: JudgmentSet, truth: GroundTruth, path: str | Path) -> Path:
    """JSONL judgments plus the ground-truth sidecar next to them."""
    written = write_judgments(judgment_set.records, path)
    write_atomic(truth_path(path), canonical_json(truth))
    return written


def load_synthetic_config(path: str | Path) -> SyntheticConfig:
    path = Path(path)
    if not path.exists():
        raise InputError(f"generator config not found: {path}")
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise InputError(f"{path}: malformed YAML: {e}") from e
    if not isinstance(document, dict):
        raise InputError(f"{path}: expected a mapping at the top level")
    try:
        return SyntheticConfig(**document)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(part) for part in first["loc"]) or "document"
        raise InputError(f"{path}: key '{key}': {first['msg']}") from e
