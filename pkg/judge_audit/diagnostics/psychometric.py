"""Psychometric validity of a judge's factor scores.

Three components are combined with equal weight: internal consistency (Cronbach's alpha per
factor, questions as items), factor separation (cross-loading ratio of varimax-rotated principal
loadings, squashed by a sigmoid centered at 1.5) and discriminant validity (heterotrait-monotrait
ratio between factors). A judge whose factors collapse into one general impression scores low on
the last two.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from factor_analyzer.rotator import Rotator
from pydantic import BaseModel
from scipy.optimize import linear_sum_assignment
from scipy.special import expit

from judge_audit.config.settings import CLR_SLOPE, CLR_THRESHOLD, SCORE_RANGE
from judge_audit.diagnostics.score_cube import ScoreCube
from judge_audit.errors import InputError, NumericError
from judge_audit.stats.linalg import eigendecompose_symmetric, orient_columns

logger = logging.getLogger(__name__)

CROSS_LOADING_FLOOR = 1e-12


def cronbach_alpha(cube: ScoreCube, factor: int) -> float:
    """alpha = n/(n-1) * (1 - sum of item variances / variance of the item total).

    Items are the questions; variances run over observation series (ddof=1). Negative values
    are returned as is.
    """
    cube = cube.complete()
    cube.check_reliability_shape()
    items = cube.items(factor)
    n = items.shape[1]
    item_variance = items.var(axis=0, ddof=1).sum()
    total_variance = items.sum(axis=1).var(ddof=1)
    if total_variance <= 0:
        raise NumericError(f"no observation variance for factor '{cube.criteria[factor]}'")
    return float(n / (n - 1) * (1.0 - item_variance / total_variance))


@dataclass(frozen=True)
class LoadingsMatrix:
    """Rotated loadings with column i matched to observed factor i."""

    values: np.ndarray
    eigenvalues: np.ndarray
    assignment: Tuple[int, ...]
    criteria: Tuple[str, ...]
    rotation: str = "varimax"

    def as_frame(self) -> pd.DataFrame:
        """Long form (observed_factor, latent_factor, loading) for heatmaps."""
        k = len(self.criteria)
        return pd.DataFrame(
            {
                "observed_factor": [self.criteria[i] for i in range(k) for _ in range(k)],
                "latent_factor": [f"latent_{j + 1}" for _ in range(k) for j in range(k)],
                "loading": self.values.ravel(),
            }
        )


def _rotate(loadings: np.ndarray) -> np.ndarray:
    return Rotator(method="varimax").fit_transform(loadings)


def extract_loadings(cube: ScoreCube) -> LoadingsMatrix:
    """Full-rank PCA on the pooled factor correlation matrix, varimax, Hungarian matching.

    Each latent column goes to the observed factor it loads on most heavily, the matching
    maximizing total |loading|. Columns are then signed so their largest entry is positive.
    """
    if cube.k < 2:
        raise InputError("factor extraction needs at least 2 factors")
    correlation = cube.pooled().corr(method="pearson").to_numpy()
    if not np.all(np.isfinite(correlation)):
        raise NumericError("pooled factor correlations are not finite (constant factor?)")

    eigenvalues, vectors = eigendecompose_symmetric(correlation)
    principal = vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    rotated = _rotate(principal)

    _, columns = linear_sum_assignment(np.abs(rotated), maximize=True)
    matched = orient_columns(rotated[:, columns])
    return LoadingsMatrix(
        values=matched,
        eigenvalues=eigenvalues,
        assignment=tuple(int(c) for c in columns),
        criteria=cube.criteria,
    )


def cross_loading_ratio(loadings: LoadingsMatrix, factor: int) -> float:
    """|l_ii| / max_{j != i} |l_ij|; +inf when there is no cross-loading at all."""
    row = np.abs(loadings.values[factor])
    cross = np.delete(row, factor).max()
    if cross < CROSS_LOADING_FLOOR:
        return float("inf")
    return float(row[factor] / cross)


def sigmoid_normalize_clr(clr: float) -> float:
    """1 / (1 + exp(-2 (clr - 1.5))), with +inf mapped to 1."""
    if np.isnan(clr) or clr < 0:
        raise InputError(f"cross-loading ratio must be non-negative, got {clr}")
    if np.isinf(clr):
        return 1.0
    return float(expit(CLR_SLOPE * (clr - CLR_THRESHOLD)))


def _item_correlations(cube: ScoreCube) -> np.ndarray:
    """Pearson correlations between all k*n items across observation series."""
    stacked = np.concatenate([cube.items(f) for f in range(cube.k)], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.atleast_2d(np.corrcoef(stacked, rowvar=False))


def _within_mean(block: np.ndarray, name: str) -> float:
    upper = block[np.triu_indices(block.shape[0], k=1)]
    value = float(np.nanmean(upper)) if np.isfinite(upper).any() else float("nan")
    if not value > 0:
        raise NumericError(
            f"unreliable trait '{name}': mean within-factor item correlation is {value:.4g}"
        )
    return value


def _cross_mean(block: np.ndarray) -> float:
    """Mean over item pairs from different questions (heterotrait-heteromethod)."""
    off = block[~np.eye(block.shape[0], dtype=bool)]
    if not np.isfinite(off).any():
        raise NumericError("no defined cross-factor item correlations")
    return float(np.nanmean(off))


def _htmt_from_correlations(
    correlations: np.ndarray, n: int, i: int, j: int, names: Sequence[str]
) -> float:
    block_i = correlations[i * n : (i + 1) * n, i * n : (i + 1) * n]
    block_j = correlations[j * n : (j + 1) * n, j * n : (j + 1) * n]
    cross = correlations[i * n : (i + 1) * n, j * n : (j + 1) * n]
    within_i = _within_mean(block_i, names[i])
    within_j = _within_mean(block_j, names[j])
    return abs(_cross_mean(cross)) / float(np.sqrt(within_i * within_j))


def htmt(cube: ScoreCube, i: int, j: int) -> float:
    """Heterotrait-monotrait ratio between factors i and j; question columns are the items."""
    cube = cube.complete()
    cube.check_reliability_shape()
    return _htmt_from_correlations(_item_correlations(cube), cube.n, i, j, cube.criteria)


def htmt_matrix(cube: ScoreCube) -> np.ndarray:
    cube = cube.complete()
    cube.check_reliability_shape()
    correlations = _item_correlations(cube)
    k = cube.k
    matrix = np.ones((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            value = _htmt_from_correlations(correlations, cube.n, i, j, cube.criteria)
            matrix[i, j] = matrix[j, i] = value
    return matrix


def mean_off_diagonal(matrix: np.ndarray) -> float:
    k = matrix.shape[0]
    return float(matrix[np.triu_indices(k, k=1)].mean())


class PsychometricReport(BaseModel):
    criteria: List[str]
    questions: int
    observations: int
    alpha: Dict[str, float]
    clr_raw: Dict[str, float]
    clr_norm: Dict[str, float]
    htmt: List[List[float]]
    eigenvalues: List[float]
    loadings: List[List[float]]
    unified: float
    sensitivity: float
    score_range: float = SCORE_RANGE

    @property
    def mean_htmt(self) -> float:
        return mean_off_diagonal(np.asarray(self.htmt))

    @classmethod
    def from_components(
        cls,
        alpha: Dict[str, float],
        clr_raw: Dict[str, float],
        clr_norm: Dict[str, float],
        htmt: np.ndarray,
        score_range: float,
        **fields,
    ) -> "PsychometricReport":
        """Equal-weight unified score and its sensitivity on the judgment scale."""
        unified = (
            float(np.mean(list(alpha.values())))
            + float(np.mean(list(clr_norm.values())))
            + (1.0 - mean_off_diagonal(htmt))
        ) / 3.0
        return cls(
            alpha=alpha,
            clr_raw=clr_raw,
            clr_norm=clr_norm,
            htmt=np.asarray(htmt).tolist(),
            unified=unified,
            sensitivity=float(np.sqrt(max(0.0, 1.0 - unified)) * score_range),
            score_range=score_range,
            **fields,
        )

    @classmethod
    def pool(cls, reports: Sequence["PsychometricReport"]) -> "PsychometricReport":
        """Average components over imputations, then recompute unified and sensitivity."""
        if not reports:
            raise InputError("nothing to pool")
        if len(reports) == 1:
            return reports[0]
        first = reports[0]

        def mean_map(name: str) -> Dict[str, float]:
            return {
                c: float(np.mean([getattr(r, name)[c] for r in reports])) for c in first.criteria
            }

        return cls.from_components(
            alpha=mean_map("alpha"),
            clr_raw=mean_map("clr_raw"),
            clr_norm=mean_map("clr_norm"),
            htmt=np.mean([np.asarray(r.htmt) for r in reports], axis=0),
            score_range=first.score_range,
            criteria=first.criteria,
            questions=first.questions,
            observations=first.observations,
            eigenvalues=np.mean([r.eigenvalues for r in reports], axis=0).tolist(),
            loadings=np.mean([np.asarray(r.loadings) for r in reports], axis=0).tolist(),
        )


def psychometric_validity(
    cube: ScoreCube, score_range: float = SCORE_RANGE
) -> PsychometricReport:
    if score_range <= 0:
        raise InputError(f"score range must be positive, got {score_range}")
    cube = cube.complete()
    cube.check_reliability_shape()

    alpha = {name: cronbach_alpha(cube, i) for i, name in enumerate(cube.criteria)}
    loadings = extract_loadings(cube)
    clr_raw = {name: cross_loading_ratio(loadings, i) for i, name in enumerate(cube.criteria)}
    clr_norm = {name: sigmoid_normalize_clr(value) for name, value in clr_raw.items()}
    matrix = htmt_matrix(cube)
    logger.debug("psychometric components computed over %d series", cube.r)

    return PsychometricReport.from_components(
        alpha=alpha,
        clr_raw=clr_raw,
        clr_norm=clr_norm,
        htmt=matrix,
        score_range=score_range,
        criteria=list(cube.criteria),
        questions=cube.n,
        observations=cube.r,
        eigenvalues=loadings.eigenvalues.tolist(),
        loadings=loadings.values.tolist(),
    )
