"""Small dense linear-algebra kernel shared by the rest of the package.

Index sets are plain sorted ``int64`` numpy arrays; matrices are 2-D float
arrays.  Everything here is a pure function of its inputs.
"""
import numpy as np

__all__ = [
    "RANK_TOL",
    "SingularMatrixError",
    "as_index_set",
    "columns",
    "least_squares",
    "min_singular_value",
    "operator_norm",
    "singular_values",
]

#: relative tolerance used to decide "full column rank"
RANK_TOL = 1e-10


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a least-squares system is numerically rank deficient."""


def as_index_set(indices, m=None):
    """Return `indices` as a sorted, duplicate-free int64 array.

    If `m` is given every index must lie in ``[0, m)``.
    """
    if isinstance(indices, (set, frozenset)):
        indices = sorted(indices)
    arr = np.unique(np.asarray(indices, dtype=np.int64).ravel())
    if arr.size and arr[0] < 0:
        raise ValueError(f"negative index {arr[0]} in index set")
    if m is not None and arr.size and arr[-1] >= m:
        raise ValueError(f"index {arr[-1]} out of range for dimension {m}")
    return arr


def _check_matrix(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def columns(A, T):
    """Sub-matrix of `A` made of the columns listed in `T` (in that order)."""
    A = np.asarray(A, dtype=float)
    T = np.asarray(T, dtype=np.int64).ravel()
    if T.size and (T.min() < 0 or T.max() >= A.shape[1]):
        raise ValueError(f"column index out of range for a matrix with {A.shape[1]} columns")
    return A[:, T]


def singular_values(A):
    """All singular values of `A` in decreasing order (empty for 0 columns)."""
    A = _check_matrix(A)
    if A.shape[0] == 0 or A.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.svd(A, compute_uv=False)


def min_singular_value(A):
    """Smallest singular value of the columns of `A`.

    For a wide matrix (more columns than rows) this is 0, i.e. the value is
    ``sqrt(lambda_min(A^T A))``.  A matrix with no columns returns ``inf``
    so that conditions on an empty support hold vacuously.
    """
    A = _check_matrix(A)
    if A.shape[1] == 0:
        return np.inf
    if A.shape[1] > A.shape[0]:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def operator_norm(A):
    """Spectral norm ``||A||_2``; 0 for an empty matrix."""
    A = _check_matrix(A)
    if A.shape[0] == 0 or A.shape[1] == 0:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False)[0])


def least_squares(A, y):
    """Solve ``min ||y - A b||_2`` for a full-column-rank `A` (thin SVD).

    Raises :class:`SingularMatrixError` if ``sigma_min <= RANK_TOL * sigma_max``.
    """
    A = _check_matrix(A)
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, y has {y.shape[0]} entries")
    k = A.shape[1]
    if k == 0:
        return np.zeros(0)
    if k > A.shape[0]:
        raise SingularMatrixError(f"{k} columns but only {A.shape[0]} rows")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise SingularMatrixError("matrix is numerically rank deficient")
    return Vt.T @ ((U.T @ y) / s)
