from judge_audit.judgments.verdicts import VerdictMarker, parse_verdict, verdict_to_likert
from judge_audit.judgments.matrix import build_sample_matrix
from judge_audit.judgments.deviations import deviation_counts, deviation_rates
from judge_audit.judgments.imputation import impute_missing

__all__ = [
    "VerdictMarker",
    "parse_verdict",
    "verdict_to_likert",
    "build_sample_matrix",
    "deviation_counts",
    "deviation_rates",
    "impute_missing",
]
