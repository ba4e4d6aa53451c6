"""Dense real linear algebra used throughout the package.

Everything here is a thin, validated layer over numpy/scipy: the matrix
exponential, SVD-based numerical rank and orthonormal range bases.
"""

import numpy as np
import scipy.linalg

__all__ = ["DimensionError", "as_matrix", "expm", "rank", "range_basis", "orth_complement"]


class DimensionError(ValueError):
    """Raised when array shapes do not fit together."""


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite 2-D float array.

    Scalars become 1x1 matrices and 1-D input becomes a column.
    """
    M = np.array(M, dtype=float)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    elif M.ndim == 1:
        M = M.reshape(-1, 1)
    elif M.ndim != 2:
        raise DimensionError(f"{name} must be at most 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def expm(A, t=1.0):
    """Matrix exponential ``e^{At}``.

    Backed by scipy's Pade scaling-and-squaring, which squares until the
    scaled norm is inside the Pade region before the rational evaluation.
    """
    A = as_matrix(A, "A")
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"expm needs a square matrix, got {A.shape}")
    t = float(t)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    if t == 0.0:
        return np.eye(A.shape[0])
    return scipy.linalg.expm(A * t)


def _default_tol(M):
    return max(M.shape) * np.finfo(float).eps


def rank(M, tol=None):
    """Number of singular values above ``tol * sigma_max``.

    The default ``tol`` is ``max(rows, cols) * eps``.
    """
    M = as_matrix(M)
    if M.size == 0:
        return 0
    if tol is None:
        tol = _default_tol(M)
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def range_basis(M, tol=None):
    """Orthonormal basis (as columns) of the column space of ``M``.

    Returns an ``rows x r`` array with ``r = rank(M, tol)``; a zero matrix
    gives an ``rows x 0`` array.
    """
    M = as_matrix(M)
    if tol is None:
        tol = _default_tol(M)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((M.shape[0], 0))
    r = int(np.sum(s > tol * s[0]))
    return U[:, :r].copy()


def orth_complement(P):
    """Orthonormal basis of the orthogonal complement of ``range(P)``.

    ``P`` must already have orthonormal columns.
    """
    P = as_matrix(P)
    n, r = P.shape
    if r == 0:
        return np.eye(n)
    if r == n:
        return np.zeros((n, 0))
    Q, _ = np.linalg.qr(np.hstack([P, np.eye(n)]))
    # QR of [P, I] keeps span(P) in the leading r columns.
    return Q[:, r:n].copy()
