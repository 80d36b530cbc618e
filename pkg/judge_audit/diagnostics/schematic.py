"""Schematic adherence: how much of the overall verdict the factor verdicts explain.

The overall score is regressed on the factor scores twice, once linearly and once with the full
second-order design (squares and pairwise interactions). The larger R-squared is the schematic
adherence; what neither model explains is judgment variance the rubric does not account for.
Weights from the linear fit feed the integration-bias metrics, and per-cluster fits over groups
of similar questions measure how stable those weights are across contexts.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from scipy import stats
from sklearn.cluster import KMeans
from sklearn.metrics import silhouette_score
from sklearn.preprocessing import PolynomialFeatures

from judge_audit.config.settings import MAX_AUTO_CLUSTERS, POLYNOMIAL_DEGREE
from judge_audit.errors import InputError, NumericError
from judge_audit.stats.ols import INTERCEPT, OlsFit, ols
from judge_audit.storage.judgment_state import SampleMatrix

logger = logging.getLogger(__name__)


def polynomial_design(
    factors: np.ndarray, names: Sequence[str], degree: int = POLYNOMIAL_DEGREE
) -> Tuple[np.ndarray, List[str]]:
    """Every monomial of the factors up to ``degree``, without the constant."""
    if degree < 1:
        raise InputError(f"polynomial degree must be at least 1, got {degree}")
    expander = PolynomialFeatures(degree=degree, include_bias=False)
    design = expander.fit_transform(np.asarray(factors, dtype=float))
    terms = [str(t) for t in expander.get_feature_names_out(list(names))]
    return design, terms


def fit_linear_arrays(
    factors: np.ndarray, overall: np.ndarray, names: Sequence[str]
) -> OlsFit:
    return ols(factors, overall, names)


def fit_polynomial_arrays(
    factors: np.ndarray,
    overall: np.ndarray,
    names: Sequence[str],
    degree: int = POLYNOMIAL_DEGREE,
) -> OlsFit:
    design, terms = polynomial_design(factors, names, degree)
    required = design.shape[1] + 1
    if design.shape[0] <= required:
        raise NumericError(
            f"polynomial schema needs more than {required} rows for {len(terms)} terms, "
            f"got {design.shape[0]}"
        )
    return ols(design, overall, terms)


def schematic_r2(
    factors: np.ndarray,
    overall: np.ndarray,
    names: Sequence[str],
    degree: int = POLYNOMIAL_DEGREE,
) -> float:
    """max(linear R², polynomial R²) on raw arrays; used by the bootstrap."""
    linear = fit_linear_arrays(factors, overall, names)
    poly = fit_polynomial_arrays(factors, overall, names, degree)
    return max(linear.r_squared, poly.r_squared)


def fit_linear_schema(sample: SampleMatrix) -> OlsFit:
    """o_i = b0 + sum_j b_j f_ij + e_i on the raw 1-5 scale."""
    return fit_linear_arrays(sample.factors, sample.overall, sample.criteria)


def fit_polynomial_schema(sample: SampleMatrix, degree: int = POLYNOMIAL_DEGREE) -> OlsFit:
    """Full quadratic schema by default: k linear, k squared and k(k-1)/2 interaction terms."""
    return fit_polynomial_arrays(sample.factors, sample.overall, sample.criteria, degree)


def _absolute_weights(weights: Sequence[float] | np.ndarray) -> np.ndarray:
    magnitudes = np.abs(np.asarray(weights, dtype=float))
    if magnitudes.size == 0 or not np.any(magnitudes > 0):
        raise NumericError("no factor signal: every factor weight is zero")
    return magnitudes


def weight_disparity(weights: Sequence[float] | np.ndarray) -> float:
    """Population std of |b| over mean of |b|."""
    magnitudes = _absolute_weights(weights)
    return float(magnitudes.std() / magnitudes.mean())


def weight_entropy(weights: Sequence[float] | np.ndarray) -> float:
    """Shannon entropy (nats) of the normalized |b| distribution."""
    return float(stats.entropy(_absolute_weights(weights)))


@dataclass(frozen=True)
class QuestionClusters:
    assignments: Dict[str, int]
    c: int
    centroids: np.ndarray
    silhouette: Optional[float] = None

    def members(self, cluster: int) -> List[str]:
        return [q for q, label in self.assignments.items() if label == cluster]


def _question_profiles(sample: SampleMatrix) -> pd.DataFrame:
    frame = pd.DataFrame(sample.factors, columns=list(sample.criteria))
    frame["question_id"] = sample.question_ids
    return frame.groupby("question_id", sort=True).mean()


def _canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber clusters in order of first appearance."""
    order: Dict[int, int] = {}
    for label in labels:
        order.setdefault(int(label), len(order))
    return np.array([order[int(label)] for label in labels], dtype=int)


def _kmeans(profiles: np.ndarray, c: int, seed: int) -> np.ndarray:
    model = KMeans(n_clusters=c, n_init=10, random_state=seed)
    return _canonical_labels(model.fit_predict(profiles))


def cluster_questions(
    sample: SampleMatrix, c: Optional[int] = None, seed: int = 0
) -> QuestionClusters:
    """K-means over per-question mean factor vectors.

    Without ``c`` the count is chosen by the best silhouette over 2..min(8, questions / 10).
    """
    profiles = _question_profiles(sample)
    n = len(profiles)
    if n < 2:
        raise InputError(f"clustering needs at least 2 distinct questions, got {n}")
    points = profiles.to_numpy()
    distinct = len(np.unique(points, axis=0))

    silhouette = None
    if c is not None:
        if c < 2 or c > n:
            raise InputError(f"cluster count must lie in [2, {n}], got {c}")
        labels = _kmeans(points, c, seed)
    else:
        upper = min(MAX_AUTO_CLUSTERS, n // 10, distinct - 1)
        if upper < 2:
            c = 2
            labels = _kmeans(points, c, seed)
        else:
            best: Optional[Tuple[float, int, np.ndarray]] = None
            for candidate in range(2, upper + 1):
                candidate_labels = _kmeans(points, candidate, seed)
                if len(np.unique(candidate_labels)) < 2:
                    continue
                score = float(silhouette_score(points, candidate_labels))
                if best is None or score > best[0]:
                    best = (score, candidate, candidate_labels)
            if best is None:
                raise NumericError("question profiles admit no clustering")
            silhouette, c, labels = best
        logger.info("clustered %d questions into %d groups", n, c)

    present = np.unique(labels)
    centroids = np.vstack([points[labels == label].mean(axis=0) for label in present])
    return QuestionClusters(
        assignments={q: int(label) for q, label in zip(profiles.index, labels)},
        c=int(present.size),
        centroids=centroids,
        silhouette=silhouette,
    )


def context_stability(
    sample: SampleMatrix,
    clusters: QuestionClusters,
    ordered_pairs: bool = False,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """1 - (1/(c(c-1))) * sum over cluster pairs i<j of ||b_i - b_j||_2.

    Weights exclude the intercept. Clusters too small or too uniform to fit are dropped and c is
    the number of clusters that remain. ``ordered_pairs`` uses 2/(c(c-1)) instead, i.e. the mean
    pairwise distance.
    """
    k = sample.k
    labels = np.array([clusters.assignments.get(q, -1) for q in sample.question_ids])
    cluster_weights: Dict[str, np.ndarray] = {}
    for cluster in sorted(set(clusters.assignments.values())):
        rows = np.flatnonzero(labels == cluster)
        if rows.size <= k + 1:
            logger.warning(
                "dropping cluster %d: %d rows, need more than %d", cluster, rows.size, k + 1
            )
            continue
        try:
            fit = fit_linear_arrays(sample.factors[rows], sample.overall[rows], sample.criteria)
        except NumericError as exc:
            logger.warning("dropping cluster %d: %s", cluster, exc.message)
            continue
        cluster_weights[str(cluster)] = fit.weights

    c = len(cluster_weights)
    if c < 2:
        raise NumericError(f"context stability needs at least 2 usable clusters, got {c}")
    vectors = list(cluster_weights.values())
    total = sum(
        float(np.linalg.norm(vectors[i] - vectors[j]))
        for i in range(c)
        for j in range(i + 1, c)
    )
    scale = 2.0 / (c * (c - 1)) if ordered_pairs else 1.0 / (c * (c - 1))
    return 1.0 - scale * total, cluster_weights


class SchematicReport(BaseModel):
    """Variance decomposition and integration-bias metrics for one sample."""

    rows: int
    degree: int = POLYNOMIAL_DEGREE
    r2_linear: float
    r2_polynomial: float
    r2_schematic: float
    sensitivity: float
    unexplained_percent: float
    linear_weights: Dict[str, float]
    polynomial_terms: Dict[str, float]
    weight_disparity: float
    weight_entropy: float
    context_stability: Optional[float] = None
    clusters: Optional[int] = None
    cluster_weights: Dict[str, Dict[str, float]] = Field(default_factory=dict)

    @property
    def r2_improvement(self) -> float:
        return self.r2_polynomial - self.r2_linear

    @classmethod
    def from_r2(cls, r2_linear: float, r2_polynomial: float, **fields) -> "SchematicReport":
        r2_schematic = max(r2_linear, r2_polynomial)
        return cls(
            r2_linear=r2_linear,
            r2_polynomial=r2_polynomial,
            r2_schematic=r2_schematic,
            sensitivity=float(np.sqrt(max(0.0, 1.0 - r2_schematic))),
            unexplained_percent=100.0 * (1.0 - r2_schematic),
            **fields,
        )

    @classmethod
    def pool(cls, reports: Sequence["SchematicReport"]) -> "SchematicReport":
        """Average over imputations; derived fields are recomputed from the pooled R²."""
        if not reports:
            raise InputError("nothing to pool")
        if len(reports) == 1:
            return reports[0]

        def mean_map(maps: List[Dict[str, float]]) -> Dict[str, float]:
            return {key: float(np.mean([m[key] for m in maps])) for key in maps[0]}

        stabilities = [r.context_stability for r in reports if r.context_stability is not None]
        shared_clusters = set.intersection(*(set(r.cluster_weights) for r in reports))
        return cls.from_r2(
            float(np.mean([r.r2_linear for r in reports])),
            float(np.mean([r.r2_polynomial for r in reports])),
            rows=reports[0].rows,
            degree=reports[0].degree,
            linear_weights=mean_map([r.linear_weights for r in reports]),
            polynomial_terms=mean_map([r.polynomial_terms for r in reports]),
            weight_disparity=float(np.mean([r.weight_disparity for r in reports])),
            weight_entropy=float(np.mean([r.weight_entropy for r in reports])),
            context_stability=float(np.mean(stabilities)) if stabilities else None,
            clusters=reports[0].clusters,
            cluster_weights={
                key: mean_map([r.cluster_weights[key] for r in reports])
                for key in sorted(shared_clusters)
            },
        )


def schematic_adherence(
    sample: SampleMatrix,
    clusters: Optional[QuestionClusters] = None,
    degree: int = POLYNOMIAL_DEGREE,
    ordered_pairs: bool = False,
) -> SchematicReport:
    linear = fit_linear_schema(sample)
    polynomial = fit_polynomial_schema(sample, degree)

    stability = None
    cluster_weights: Dict[str, Dict[str, float]] = {}
    if clusters is not None:
        stability, weights = context_stability(sample, clusters, ordered_pairs)
        cluster_weights = {
            key: dict(zip(sample.criteria, map(float, vector))) for key, vector in weights.items()
        }

    return SchematicReport.from_r2(
        linear.r_squared,
        polynomial.r_squared,
        rows=sample.m,
        degree=degree,
        linear_weights=linear.coefficient_map(),
        polynomial_terms=polynomial.coefficient_map(),
        weight_disparity=weight_disparity(linear.weights),
        weight_entropy=weight_entropy(linear.weights),
        context_stability=stability,
        clusters=clusters.c if clusters is not None else None,
        cluster_weights=cluster_weights,
    )


def weight_frame(report: SchematicReport) -> pd.DataFrame:
    """Per-factor weights, one column for the global fit and one per cluster."""
    factors = [name for name in report.linear_weights if name != INTERCEPT]
    frame = pd.DataFrame({"factor": factors})
    frame["weight"] = [report.linear_weights[name] for name in factors]
    for cluster, weights in report.cluster_weights.items():
        frame[f"cluster_{cluster}"] = [weights[name] for name in factors]
    return frame
