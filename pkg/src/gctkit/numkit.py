"""Dense numeric kernels: pairwise distances, SPD solves, row norms.

Matrices are plain ``float64`` numpy arrays. Feature matrices are laid out
``dim x N`` with one embedding per column.
"""
import numpy as np
from scipy import linalg

from .errors import SingularMatrixError, ValidationError

SYMMETRY_TOL = 1e-8
PIVOT_TOL = 1e-12


def as_matrix(values, name="matrix"):
    """Return ``values`` as a finite 2-D float64 array, raising otherwise."""
    M = np.asarray(values, dtype=np.float64)
    if M.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} contains non-finite values")
    return M


def pairwise_sq_dist(X):
    """Squared Euclidean distances between the columns of ``X`` (dim x N)."""
    X = as_matrix(X, "X")
    if X.shape[1] < 1:
        raise ValidationError("X must have at least one column")
    sq = np.einsum("ij,ij->j", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X.T @ X)
    # cancellation can leave tiny negatives and an unsymmetric round-off pattern
    D = 0.5 * (D + D.T)
    np.maximum(D, 0.0, out=D)
    np.fill_diagonal(D, 0.0)
    return D


def solve_spd(M, rhs):
    """Solve ``M @ Z = rhs`` for symmetric positive definite ``M``.

    Uses a Cholesky factorization. A pivot (squared diagonal of the factor)
    below ``PIVOT_TOL`` raises :class:`SingularMatrixError` naming its index.
    """
    M = as_matrix(M, "M")
    rhs = np.asarray(rhs, dtype=np.float64)
    vector_rhs = rhs.ndim == 1
    if vector_rhs:
        rhs = rhs[:, None]
    rhs = as_matrix(rhs, "rhs")
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValidationError(f"M must be square, got {M.shape}")
    if rhs.shape[0] != n:
        raise ValidationError(f"rhs has {rhs.shape[0]} rows, expected {n}")
    scale = max(np.abs(M).max(), 1.0)
    if np.abs(M - M.T).max() > SYMMETRY_TOL * scale:
        raise ValidationError("M is not symmetric")

    try:
        factor = linalg.cholesky(M, lower=True, check_finite=False)
    except linalg.LinAlgError:
        factor = None
    if factor is None:
        # LAPACK stops at the first non-positive leading minor; recover its index
        idx, pivot = _first_bad_pivot(M)
        raise SingularMatrixError(idx, pivot)
    pivots = np.diag(factor) ** 2
    bad = np.flatnonzero(pivots < PIVOT_TOL)
    if bad.size:
        raise SingularMatrixError(int(bad[0]), float(pivots[bad[0]]))

    Z = linalg.cho_solve((factor, True), rhs, check_finite=False)
    return Z[:, 0] if vector_rhs else Z


def _first_bad_pivot(M):
    n = M.shape[0]
    L = np.zeros_like(M)
    for j in range(n):
        pivot = M[j, j] - L[j, :j] @ L[j, :j]
        if pivot < PIVOT_TOL:
            return j, float(pivot)
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return n - 1, float(L[-1, -1] ** 2)


def row_l2_norms(M):
    M = as_matrix(M, "M")
    return np.sqrt(np.einsum("ij,ij->i", M, M))
