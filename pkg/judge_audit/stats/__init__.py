from judge_audit.stats.bootstrap import BootstrapResult, bootstrap, bootstrap_samples
from judge_audit.stats.correlation import (
    CorrelationMatrix,
    CorrelationMethod,
    bonferroni,
    correlation_matrix,
    spearman_matrix,
)
from judge_audit.stats.linalg import eigendecompose_symmetric, orient_columns
from judge_audit.stats.ols import OlsFit, ols

__all__ = [
    "BootstrapResult",
    "CorrelationMatrix",
    "CorrelationMethod",
    "OlsFit",
    "bonferroni",
    "bootstrap",
    "bootstrap_samples",
    "correlation_matrix",
    "eigendecompose_symmetric",
    "ols",
    "orient_columns",
    "spearman_matrix",
]
