"""Row-resampling bootstrap with deterministic per-iteration seeds."""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from joblib import Parallel, delayed

from judge_audit.config.settings import (
    DEFAULT_BOOTSTRAP_ITERATIONS,
    DEFAULT_CONFIDENCE_LEVEL,
    MAX_FAILED_BOOTSTRAP_FRACTION,
)
from judge_audit.errors import AuditError, InputError, NumericError

logger = logging.getLogger(__name__)

Statistic = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class BootstrapResult:
    point: float
    lower: float
    upper: float
    iterations: int
    failed: int
    seed: int
    level: float

    def as_dict(self) -> dict:
        return {
            "point": self.point,
            "lower": self.lower,
            "upper": self.upper,
            "iterations": self.iterations,
            "failed": self.failed,
            "seed": self.seed,
            "level": self.level,
        }


def resample_rows(n: int, seed: int, iteration: int) -> np.ndarray:
    """Row indices for one bootstrap draw; depends only on (seed, iteration)."""
    rng = np.random.default_rng([seed, iteration])
    return rng.integers(0, n, size=n)


def percentile_interval(samples: np.ndarray, level: float) -> tuple[float, float]:
    if not 0.0 < level < 1.0:
        raise InputError(f"confidence level must lie in (0, 1), got {level}")
    alpha = (1.0 - level) / 2.0
    lower, upper = np.quantile(samples, [alpha, 1.0 - alpha])
    return float(lower), float(upper)


def _one_draw(statistic: Statistic, rows: int, seed: int, iteration: int) -> Optional[float]:
    try:
        value = float(statistic(resample_rows(rows, seed, iteration)))
    except (AuditError, np.linalg.LinAlgError, ValueError):
        return None
    return value if np.isfinite(value) else None


def bootstrap_samples(
    statistic: Statistic,
    rows: int,
    iterations: int = DEFAULT_BOOTSTRAP_ITERATIONS,
    seed: int = 0,
    jobs: int = 1,
) -> List[Optional[float]]:
    """Evaluate ``statistic`` on ``iterations`` resampled row-index arrays.

    Failed draws come back as None so the caller can count them.
    """
    if iterations < 1:
        raise InputError(f"bootstrap iterations must be at least 1, got {iterations}")
    if rows < 2:
        raise InputError(f"bootstrap needs at least 2 rows, got {rows}")
    return Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_one_draw)(statistic, rows, seed, i) for i in range(iterations)
    )


def bootstrap(
    statistic: Statistic,
    rows: int,
    iterations: int = DEFAULT_BOOTSTRAP_ITERATIONS,
    seed: int = 0,
    level: float = DEFAULT_CONFIDENCE_LEVEL,
    jobs: int = 1,
) -> BootstrapResult:
    """Percentile interval for ``statistic`` over resampled rows.

    ``statistic`` receives an index array into the original rows. The point estimate is the
    statistic on the identity index. More than 10% failed draws is an error.
    """
    point = float(statistic(np.arange(rows)))
    draws = bootstrap_samples(statistic, rows, iterations, seed, jobs)
    values = np.array([d for d in draws if d is not None], dtype=float)
    failed = iterations - values.size
    if failed > MAX_FAILED_BOOTSTRAP_FRACTION * iterations:
        raise NumericError(f"bootstrap failed in {failed} of {iterations} iterations")
    if failed:
        logger.warning("bootstrap skipped %d of %d failed draws", failed, iterations)
    lower, upper = percentile_interval(values, level)
    return BootstrapResult(
        point=point,
        lower=lower,
        upper=upper,
        iterations=iterations,
        failed=failed,
        seed=seed,
        level=level,
    )
