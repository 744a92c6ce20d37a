"""
Dense vector/matrix primitives.

The normal-equation operator A^T A is never formed here; it is applied as
two matvecs.
"""
import logging

import numpy as np
from scipy import linalg

from core.conf import ratkryl_setting
from core.exceptions import BreakdownError, DimensionMismatchError, NearSingularError

logger = logging.getLogger(__name__)


# ============================================================================
# INPUT CHECKS
# ============================================================================

def as_matrix(A):
    """Return A as a finite 2-D float array."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatchError('2-D matrix', A.shape, what='matrix')
    if not np.all(np.isfinite(A)):
        raise ValueError('matrix has non-finite entries')
    return A


def as_vector(x, length=None, allow_complex=False):
    """Return x as a finite 1-D array, optionally of a given length."""
    x = np.asarray(x)
    if not allow_complex or not np.iscomplexobj(x):
        x = x.astype(float, copy=False)
    if x.ndim != 1:
        raise DimensionMismatchError('1-D vector', x.shape, what='vector')
    if length is not None and x.shape[0] != length:
        raise DimensionMismatchError(length, x.shape[0], what='vector')
    if not np.all(np.isfinite(x)):
        raise ValueError('vector has non-finite entries')
    return x


# ============================================================================
# PRODUCTS
# ============================================================================

def matvec(A, x):
    """Return A x."""
    A = as_matrix(A)
    x = as_vector(x, A.shape[1])
    return A @ x


def gram_apply(A, x):
    """Return A^T (A x) without forming A^T A."""
    A = as_matrix(A)
    x = as_vector(x, A.shape[1])
    return A.T @ (A @ x)


# ============================================================================
# ORTHOGONALIZATION AND LEAST SQUARES
# ============================================================================

def orthonormalize_against(v, Q, tol=None):
    """
    Orthonormalize v against the orthonormal columns of Q.

    Modified Gram-Schmidt followed by one full reorthogonalization pass.
    Returns ``(q, norm)`` where ``norm`` is the length of v after both
    passes and before normalization. Raises BreakdownError when that length
    is at most ``tol * ||v||``.
    """
    tol = ratkryl_setting('BREAKDOWN_TOL') if tol is None else tol
    v = as_vector(v)
    columns = list(Q.T) if isinstance(Q, np.ndarray) and Q.ndim == 2 else list(Q)
    w = v.copy()
    for _ in range(2):
        for q_j in columns:
            w -= np.dot(q_j, w) * q_j

    v_norm = np.linalg.norm(v)
    w_norm = np.linalg.norm(w)
    if v_norm == 0.0 or w_norm <= tol * v_norm:
        ratio = 0.0 if v_norm == 0.0 else w_norm / v_norm
        raise BreakdownError(len(columns) + 1, ratio)
    return w / w_norm, w_norm


def dense_least_squares(B, y, tol=None):
    """
    Return c minimizing ||B c - y|| by column-pivoted QR.

    Raises NearSingularError when a diagonal pivot of R falls below
    ``tol`` times the largest one.
    """
    tol = ratkryl_setting('LSQ_PIVOT_TOL') if tol is None else tol
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B[:, np.newaxis]
    B = as_matrix(B)
    y = as_vector(y, B.shape[0])

    m, k = B.shape
    if k > m:
        raise NearSingularError(0.0, column=m, message=f'{k} columns but only {m} rows')

    Qf, R, perm = linalg.qr(B, mode='economic', pivoting=True)
    pivots = np.abs(np.diag(R))
    if pivots[0] == 0.0:
        raise NearSingularError(0.0, column=int(perm[0]))
    ratios = pivots / pivots[0]
    bad = np.flatnonzero(ratios <= tol)
    if bad.size:
        first = int(bad[0])
        logger.debug('least squares rejected: pivot ratio %.3e at column %d', ratios[first], perm[first])
        raise NearSingularError(float(ratios[first]), column=int(perm[first]))

    c_perm = linalg.solve_triangular(R, Qf.T @ y)
    c = np.empty(k)
    c[perm] = c_perm
    return c
