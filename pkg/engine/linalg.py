"""
Dense linear algebra used across the engine.
SPD solves, minimum-norm least squares and extreme eigenvalues of small
symmetric matrices. Matrices and vectors are float64 numpy arrays.
"""

import logging

import numpy as np
import scipy.linalg
import scipy.linalg.lapack

from engine.errors import DimensionTooLarge, NotPositiveDefinite

logger = logging.getLogger(__name__)

# Relative tolerances
SYMMETRY_RTOL = 1e-12
PIVOT_RTOL = 1e-12
SINGULAR_VALUE_CUTOFF = 1e-10
EIG_MAX_SIDE = 200


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return `a` as a finite 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Return `v` as a finite 1-D float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _check_symmetric(a: np.ndarray, name: str):
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    scale = max(float(np.max(np.abs(a))), 1.0) if a.size else 1.0
    if a.size and float(np.max(np.abs(a - a.T))) > SYMMETRY_RTOL * scale:
        raise ValueError(f"{name} is not symmetric")


def solve_spd(a, b) -> np.ndarray:
    """
    Solve A x = b for symmetric positive-definite A by Cholesky.

    Raises:
        NotPositiveDefinite: when a pivot is <= 1e-12 * trace(A) / n
    """
    a = as_matrix(a, "A")
    b = as_vector(b, "b")
    _check_symmetric(a, "A")
    n = a.shape[0]
    if b.shape[0] != n:
        raise ValueError(f"dimension mismatch: A is {a.shape}, b has {b.shape[0]}")
    if n == 0:
        return np.zeros(0)

    threshold = PIVOT_RTOL * float(np.trace(a)) / n
    factor, info = scipy.linalg.lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        # dpotrf stops at the first non-positive leading minor
        raise NotPositiveDefinite(info - 1, float("nan"), threshold)
    if info < 0:
        raise ValueError(f"dpotrf rejected argument {-info}")

    pivots = np.diag(factor) ** 2
    bad = np.flatnonzero(pivots <= threshold)
    if bad.size:
        raise NotPositiveDefinite(int(bad[0]), float(pivots[bad[0]]), threshold)
    return scipy.linalg.cho_solve((factor, True), b, check_finite=False)


def least_squares_min_norm(x, y) -> np.ndarray:
    """
    Minimum-norm minimizer of ||y - X beta||_2.

    Singular values below 1e-10 * sigma_max are treated as zero, so a
    rank-deficient design gets the pseudo-inverse solution. A design with zero
    columns returns an empty coefficient vector.
    """
    x = np.asarray(x, dtype=np.float64)
    y = as_vector(y, "y")
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError(f"dimension mismatch: X is {x.shape}, y has {y.shape[0]}")
    if x.shape[0] < 1:
        raise ValueError("X needs at least one row")
    if x.shape[1] == 0:
        return np.zeros(0)
    beta, _, rank, _ = np.linalg.lstsq(x, y, rcond=SINGULAR_VALUE_CUTOFF)
    if rank < x.shape[1]:
        logger.debug(f"⚠️ rank-deficient least squares: rank {rank} < {x.shape[1]} columns")
    return beta


def sym_eig_range(a) -> tuple[float, float]:
    """Return (lambda_min, lambda_max) of a symmetric matrix with side <= 200."""
    a = as_matrix(a, "A")
    _check_symmetric(a, "A")
    if a.shape[0] > EIG_MAX_SIDE:
        raise DimensionTooLarge(
            f"sym_eig_range is capped at side {EIG_MAX_SIDE}, got {a.shape[0]}"
        )
    if a.shape[0] == 0:
        raise ValueError("A must be non-empty")
    w = np.linalg.eigvalsh(a)
    return float(w[0]), float(w[-1])
