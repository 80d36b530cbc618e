"""Correlation matrices with t-approximation p-values and Bonferroni correction."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from judge_audit.errors import InputError, NumericError


class CorrelationMethod(str, Enum):
    SPEARMAN = "spearman"
    PEARSON = "pearson"


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pairwise correlations; NaN marks pairs involving a constant column."""

    values: np.ndarray
    p_values: np.ndarray
    corrected_p: np.ndarray
    method: CorrelationMethod
    names: Tuple[str, ...]
    tests: int

    def off_diagonal(self) -> np.ndarray:
        upper = np.triu_indices(self.values.shape[0], k=1)
        return self.values[upper]

    def mean_off_diagonal(self) -> float:
        pairs = self.off_diagonal()
        pairs = pairs[np.isfinite(pairs)]
        return float(pairs.mean()) if pairs.size else float("nan")


def bonferroni(p: np.ndarray | Sequence[float], tests: int) -> np.ndarray:
    """Each entry becomes min(1, p x tests)."""
    if tests <= 0:
        raise InputError(f"Bonferroni family size must be positive, got {tests}")
    return np.minimum(1.0, np.asarray(p, dtype=float) * tests)


def correlation_matrix(
    matrix: np.ndarray,
    method: CorrelationMethod = CorrelationMethod.SPEARMAN,
    names: Optional[Sequence[str]] = None,
    tests: Optional[int] = None,
) -> CorrelationMatrix:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise InputError("correlation input must be a 2-D matrix")
    m, k = matrix.shape
    if m < 3:
        raise NumericError(f"correlation needs at least 3 rows, got {m}")
    names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(k))
    tests = tests if tests is not None else max(1, k * (k - 1) // 2)

    data = stats.rankdata(matrix, axis=0) if method is CorrelationMethod.SPEARMAN else matrix
    constant = np.ptp(matrix, axis=0) == 0

    values = np.full((k, k), np.nan)
    live = np.flatnonzero(~constant)
    if live.size:
        sub = np.atleast_2d(np.corrcoef(data[:, live], rowvar=False))
        values[np.ix_(live, live)] = np.clip(sub, -1.0, 1.0)
    np.fill_diagonal(values, 1.0)

    dof = m - 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t = values * np.sqrt(dof / (1.0 - values**2))
    p_values = 2.0 * stats.t.sf(np.abs(t), dof)
    p_values[np.isfinite(values) & (np.abs(values) >= 1.0)] = 0.0
    p_values[np.isnan(values)] = np.nan

    return CorrelationMatrix(
        values=values,
        p_values=p_values,
        corrected_p=bonferroni(p_values, tests),
        method=method,
        names=names,
        tests=tests,
    )


def spearman_matrix(
    matrix: np.ndarray,
    names: Optional[Sequence[str]] = None,
    tests: Optional[int] = None,
) -> CorrelationMatrix:
    """Pairwise Spearman rho (average ranks for ties) with two-sided p-values.

    ``tests`` is the Bonferroni family size; it defaults to the k(k-1)/2 pairs of this matrix.
    """
    return correlation_matrix(matrix, CorrelationMethod.SPEARMAN, names, tests)
