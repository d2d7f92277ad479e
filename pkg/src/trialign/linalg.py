"""Dense row-major linear algebra kernels.

All public operations take and return float64 arrays and guarantee finite
outputs. Pooling uses a single sequential-summation kernel (ufunc reduceat)
so that the one-clip and stacked-batch paths reduce in the same order, which
keeps training runs bit-reproducible.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyInputError, NonFiniteError, ShapeError

# Row norms below this are treated as degenerate (zero) rows.
DEGENERATE_EPS = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and convert input to a 2-D float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    return m


def _check_finite(m: np.ndarray, op: str) -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{op} produced non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product a @ b with shape validation."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a @ b
    return _check_finite(out, "matmul")


def l2_normalize_rows(m, eps: float = DEGENERATE_EPS) -> tuple[np.ndarray, np.ndarray]:
    """Scale each row to unit Euclidean norm.

    Returns (normalized, degenerate) where degenerate is a boolean mask of
    rows whose norm fell below eps; those rows come back all-zero rather
    than raising.
    """
    m = as_matrix(m)
    norms = np.sqrt(np.einsum("ij,ij->i", m, m))
    degenerate = norms < eps
    safe = np.where(degenerate, 1.0, norms)
    out = m / safe[:, None]
    out[degenerate] = 0.0
    return _check_finite(out, "l2_normalize_rows"), degenerate


def mean_pool_rows(m) -> np.ndarray:
    """Arithmetic mean over rows: Matrix[M x D] -> Vector[D]. Requires M >= 1.

    The reduction runs over each column's values in sorted order, so the
    result is bit-identical under any permutation of the input rows.
    """
    m = as_matrix(m)
    if m.shape[0] == 0:
        raise EmptyInputError("mean_pool_rows: input has zero rows")
    pooled = segment_mean(m, np.array([0]), np.array([m.shape[0]]))[0]
    return _check_finite(pooled, "mean_pool_rows")


def segment_mean(stacked, offsets: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Mean over row segments of a stacked matrix.

    offsets are segment start rows, counts the segment lengths; segments
    must tile the input contiguously. Each segment reduces per column over
    sorted values (then left to right), making the result independent of
    row order within a segment. Matches mean_pool_rows on a lone segment.
    """
    stacked = as_matrix(stacked, "stacked")
    counts = np.asarray(counts)
    if np.any(counts < 1):
        raise EmptyInputError("segment_mean: empty segment")
    if np.all(counts == 1):
        return stacked / 1.0
    if np.all(counts == counts[0]):
        b, m = len(counts), int(counts[0])
        canonical = np.sort(stacked.reshape(b, m, -1), axis=1)
        canonical = canonical.reshape(b * m, -1)
    else:
        parts = [np.sort(stacked[o:o + c], axis=0)
                 for o, c in zip(offsets, counts)]
        canonical = np.concatenate(parts, axis=0)
    sums = np.add.reduceat(canonical, offsets, axis=0)
    return sums / counts[:, None]
