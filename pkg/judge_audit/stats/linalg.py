from typing import Tuple

import numpy as np
from scipy import linalg

from judge_audit.config.settings import SYMMETRY_ATOL
from judge_audit.errors import NumericError


def eigendecompose_symmetric(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order with unit-norm eigenvector columns.

    Each eigenvector is signed so its largest-magnitude entry is positive.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NumericError(f"expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NumericError("matrix contains non-finite entries")
    if not np.allclose(matrix, matrix.T, atol=SYMMETRY_ATOL, rtol=0.0):
        raise NumericError("matrix is not symmetric")

    values, vectors = linalg.eigh((matrix + matrix.T) / 2.0)
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    return values, orient_columns(vectors)


def orient_columns(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs
