"""End-to-end audit of one setting.

Stages run in order: load, impute, schematic, psychometric, correlations, deviations, ranking,
collapse. Analyses that use factor scores run once per imputation and are pooled (mean of
scalars, elementwise mean of matrices). Any stage failure aborts the audit with the stage name
attached, and nothing is written. The report file name carries the input digest, so a report is
never overwritten by one built from different data.
"""

import logging
import re
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional

import numpy as np
from pydantic import BaseModel

from judge_audit import __version__
from judge_audit.config.setting_spec import SettingSpec
from judge_audit.config.settings import OVERALL
from judge_audit.diagnostics.psychometric import PsychometricReport, psychometric_validity
from judge_audit.diagnostics.schematic import (
    SchematicReport,
    cluster_questions,
    schematic_adherence,
    schematic_r2,
)
from judge_audit.diagnostics.score_cube import ScoreCube
from judge_audit.errors import AuditError, InputError
from judge_audit.judgments.deviations import deviation_counts, deviation_rates
from judge_audit.judgments.imputation import impute_missing
from judge_audit.judgments.matrix import without_deviations
from judge_audit.ranking.bradley_terry import RatingTable, bootstrap_ratings, fit_ratings
from judge_audit.ranking.collapse import CollapseReport, collapse_analysis
from judge_audit.stats.bootstrap import BootstrapResult, bootstrap
from judge_audit.stats.correlation import bonferroni, spearman_matrix
from judge_audit.storage.files import canonical_json, file_digest, load_judgments, write_atomic
from judge_audit.storage.judgment_state import JudgmentSet, SampleMatrix

logger = logging.getLogger(__name__)

DIGEST_PREFIX = 12
_UNSAFE_NAME = re.compile(r"[^A-Za-z0-9._-]+")


def name_slug(name: str) -> str:
    """File-safe form of a setting name: one dash per run of other characters."""
    return _UNSAFE_NAME.sub("-", name).strip("-.") or "setting"


class IntervalReport(BaseModel):
    point: float
    lower: float
    upper: float
    iterations: int
    failed: int
    level: float

    @classmethod
    def from_result(cls, result: BootstrapResult) -> "IntervalReport":
        return cls(
            point=result.point,
            lower=result.lower,
            upper=result.upper,
            iterations=result.iterations,
            failed=result.failed,
            level=result.level,
        )


class CorrelationReport(BaseModel):
    """Pooled Spearman matrix over the factors; null marks undefined pairs."""

    method: str = "spearman"
    names: List[str]
    values: List[List[Optional[float]]]
    p_values: List[List[Optional[float]]]
    corrected_p: List[List[Optional[float]]]
    tests: int
    mean_off_diagonal: Optional[float]
    mean_off_diagonal_ci: Optional[IntervalReport] = None


class AuditReport(BaseModel):
    tool_version: str
    setting: SettingSpec
    input_name: str
    input_digest: str
    records: int
    models: List[str]
    judges: List[str]
    schematic: SchematicReport
    schematic_r2_ci: Optional[IntervalReport] = None
    schematic_per_imputation: List[SchematicReport]
    psychometric: PsychometricReport
    psychometric_per_imputation: List[PsychometricReport]
    correlations: CorrelationReport
    deviation_counts: List[Dict[str, object]]
    deviation_rates: List[Dict[str, object]]
    ranking: RatingTable
    collapse: CollapseReport

    @property
    def file_name(self) -> str:
        return f"audit-{self.input_digest[:DIGEST_PREFIX]}-{name_slug(self.setting.name)}.json"


def _nullable(matrix: np.ndarray) -> List[List[Optional[float]]]:
    return [[None if np.isnan(v) else float(v) for v in row] for row in matrix]


@contextmanager
def stage(name: str) -> Iterator[None]:
    logger.info("stage: %s", name)
    try:
        yield
    except AuditError as e:
        raise e.in_stage(name)


class AuditWorkflow:
    """One audit run: a setting applied to one judgment file."""

    def __init__(self, setting: SettingSpec, jobs: int = 1):
        self.setting = setting
        self.options = setting.metric
        self.jobs = jobs

    def load(self, data: Path) -> JudgmentSet:
        judgment_set = load_judgments(
            data, criteria=self.setting.criteria, score_range=self.setting.score_range
        )
        filtered = judgment_set.filter(
            judge=self.setting.judge,
            questions=self.setting.questions,
            models=self.setting.models,
        )
        if len(filtered) == 0:
            raise InputError(f"no judgments in {data} match setting '{self.setting.name}'")
        logger.info("auditing %d of %d judgments", len(filtered), len(judgment_set))
        return filtered

    def impute(self, judgment_set: JudgmentSet) -> List[SampleMatrix]:
        return impute_missing(
            judgment_set,
            imputations=self.options.imputations,
            seed=self.options.seed,
            deviation_policy=self.options.deviation_policy,
            jobs=self.jobs,
        )

    def _fit_sample(self, sample: SampleMatrix) -> SampleMatrix:
        return without_deviations(sample) if self.options.exclude_deviations else sample

    def schematic(self, samples: List[SampleMatrix]) -> List[SchematicReport]:
        reports: Dict[int, SchematicReport] = {}
        for sample in samples:
            if id(sample) in reports:
                continue
            fitted = self._fit_sample(sample)
            clusters = cluster_questions(fitted, self.options.clusters, self.options.seed)
            reports[id(sample)] = schematic_adherence(
                fitted,
                clusters,
                degree=self.options.polynomial_degree,
                ordered_pairs=self.options.cs_ordered_pairs,
            )
        return [reports[id(sample)] for sample in samples]

    def schematic_interval(self, sample: SampleMatrix) -> Optional[IntervalReport]:
        if self.options.bootstrap_iterations == 0:
            return None
        fitted = self._fit_sample(sample)
        result = bootstrap(
            lambda rows: schematic_r2(
                fitted.factors[rows],
                fitted.overall[rows],
                fitted.criteria,
                self.options.polynomial_degree,
            ),
            rows=fitted.m,
            iterations=self.options.bootstrap_iterations,
            seed=self.options.seed,
            level=self.options.confidence_level,
            jobs=self.jobs,
        )
        return IntervalReport.from_result(result)

    def psychometric(self, samples: List[SampleMatrix]) -> List[PsychometricReport]:
        reports: Dict[int, PsychometricReport] = {}
        for sample in samples:
            if id(sample) not in reports:
                reports[id(sample)] = psychometric_validity(
                    ScoreCube.from_sample(sample), self.setting.score_range
                )
        return [reports[id(sample)] for sample in samples]

    def correlations(self, samples: List[SampleMatrix]) -> CorrelationReport:
        matrices = [spearman_matrix(s.factors, s.criteria) for s in samples]
        values = np.mean([m.values for m in matrices], axis=0)
        p_values = np.mean([m.p_values for m in matrices], axis=0)
        tests = matrices[0].tests
        upper = values[np.triu_indices(values.shape[0], k=1)]
        upper = upper[np.isfinite(upper)]

        interval = None
        if self.options.bootstrap_iterations > 0:
            factors = samples[0].factors
            interval = IntervalReport.from_result(
                bootstrap(
                    lambda rows: spearman_matrix(factors[rows]).mean_off_diagonal(),
                    rows=factors.shape[0],
                    iterations=self.options.bootstrap_iterations,
                    seed=self.options.seed,
                    level=self.options.confidence_level,
                    jobs=self.jobs,
                )
            )
        return CorrelationReport(
            names=list(samples[0].criteria),
            values=_nullable(values),
            p_values=_nullable(p_values),
            corrected_p=_nullable(bonferroni(p_values, tests)),
            tests=tests,
            mean_off_diagonal=float(upper.mean()) if upper.size else None,
            mean_off_diagonal_ci=interval,
        )

    def ranking(self, judgment_set: JudgmentSet) -> RatingTable:
        if self.options.rating_bootstrap_iterations == 0:
            return fit_ratings(
                judgment_set, OVERALL, self.setting.baseline, self.options.drop_ties
            )
        return bootstrap_ratings(
            judgment_set,
            OVERALL,
            iterations=self.options.rating_bootstrap_iterations,
            seed=self.options.seed,
            baseline=self.setting.baseline,
            level=self.options.confidence_level,
            drop_ties=self.options.drop_ties,
            jobs=self.jobs,
        )

    def collapse(self, judgment_set: JudgmentSet, baseline: str) -> CollapseReport:
        return collapse_analysis(
            judgment_set,
            baseline=baseline,
            drop_ties=self.options.drop_ties,
            degree=self.options.polynomial_degree,
        )

    def run(self, data: str | Path) -> AuditReport:
        data = Path(data)
        with stage("load"):
            judgment_set = self.load(data)
            digest = file_digest(data)
        with stage("impute"):
            samples = self.impute(judgment_set)
        with stage("schematic"):
            schematic_reports = self.schematic(samples)
            schematic_ci = self.schematic_interval(samples[0])
        with stage("psychometric"):
            psychometric_reports = self.psychometric(samples)
        with stage("correlations"):
            correlations = self.correlations(samples)
        with stage("deviations"):
            counts = deviation_counts(judgment_set)
            rates = deviation_rates(judgment_set)
        with stage("ranking"):
            ranking = self.ranking(judgment_set)
        with stage("collapse"):
            collapse = self.collapse(judgment_set, ranking.baseline)

        return AuditReport(
            tool_version=__version__,
            setting=self.setting,
            input_name=data.name,
            input_digest=digest,
            records=len(judgment_set),
            models=judgment_set.models(),
            judges=judgment_set.judges(),
            schematic=SchematicReport.pool(schematic_reports),
            schematic_r2_ci=schematic_ci,
            schematic_per_imputation=schematic_reports,
            psychometric=PsychometricReport.pool(psychometric_reports),
            psychometric_per_imputation=psychometric_reports,
            correlations=correlations,
            deviation_counts=counts.to_dict(orient="records"),
            deviation_rates=rates.to_dict(orient="records"),
            ranking=ranking,
            collapse=collapse,
        )


def write_report(report: AuditReport, out_dir: str | Path) -> Path:
    return write_atomic(Path(out_dir) / report.file_name, canonical_json(report))


def load_report(path: str | Path) -> AuditReport:
    path = Path(path)
    if not path.exists():
        raise InputError(f"report not found: {path}")
    try:
        return AuditReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValueError as e:
        raise InputError(f"{path} is not an audit report: {e}") from e


def run_audit(
    setting: SettingSpec,
    data: str | Path,
    out_dir: Optional[str | Path] = None,
    jobs: int = 1,
) -> AuditReport:
    """Audit ``data`` under ``setting``; with ``out_dir`` the report is also written there."""
    report = AuditWorkflow(setting, jobs).run(data)
    if out_dir is not None:
        path = write_report(report, out_dir)
        logger.info("wrote %s", path)
    return report
