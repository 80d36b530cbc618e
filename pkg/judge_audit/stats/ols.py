from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from judge_audit.config.settings import PINV_RCOND
from judge_audit.errors import NumericError

INTERCEPT = "intercept"


@dataclass(frozen=True)
class OlsFit:
    """Least-squares fit with an intercept in position 0."""

    coefficients: np.ndarray
    r_squared: float
    residuals: np.ndarray
    design_columns: Tuple[str, ...]
    rank: int

    @property
    def weights(self) -> np.ndarray:
        """Coefficients without the intercept."""
        return self.coefficients[1:]

    def coefficient_map(self) -> dict[str, float]:
        return {name: float(c) for name, c in zip(self.design_columns, self.coefficients)}


def ols(
    design: np.ndarray,
    target: np.ndarray,
    names: Optional[Sequence[str]] = None,
) -> OlsFit:
    """Ordinary least squares of ``target`` on ``design`` plus an intercept.

    Rank-deficient designs are solved with the minimum-norm pseudo-inverse, cutting singular
    values below 1e-10 times the largest one, so collinear factors never abort a fit.
    """
    design = np.asarray(design, dtype=float)
    target = np.asarray(target, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    m, p = design.shape
    if target.shape != (m,):
        raise NumericError(f"target has shape {target.shape}, expected ({m},)")
    if names is None:
        names = [f"x{j + 1}" for j in range(p)]
    if len(names) != p:
        raise NumericError(f"{len(names)} column names for {p} design columns")
    if m <= p + 1:
        raise NumericError(f"underdetermined: {m} rows for {p + 1} coefficients")

    centered = target - target.mean()
    sst = float(centered @ centered)
    if sst <= 0.0:
        raise NumericError("degenerate target: zero variance, R-squared is undefined")

    full = np.column_stack([np.ones(m), design])
    coefficients, _, rank, _ = np.linalg.lstsq(full, target, rcond=PINV_RCOND)
    residuals = target - full @ coefficients
    sse = float(residuals @ residuals)
    return OlsFit(
        coefficients=coefficients,
        r_squared=1.0 - sse / sst,
        residuals=residuals,
        design_columns=(INTERCEPT, *names),
        rank=int(rank),
    )
