"""
Brute-force reference computations over the Krylov spaces, built straight
from their definitions with no orthogonalization. Slow and ill-conditioned
on purpose: they share no code path with the solvers they check.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from apps.linops import as_matrix, as_vector, dense_least_squares
from apps.solvers.schedule import as_schedule
from core.conf import ratkryl_setting

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExplicitBasis:
    columns: tuple
    n: int
    effective_rank: int

    @property
    def matrix(self):
        return np.column_stack(self.columns)


def _normalized(B):
    norms = np.linalg.norm(B, axis=0)
    keep = norms > 0.0
    return B[:, keep] / norms[keep]


def effective_rank(columns, tol=None):
    """Numerical rank of the column-normalized matrix (relative SVD threshold)."""
    tol = ratkryl_setting('RANK_TOL') if tol is None else tol
    B = _normalized(np.column_stack(columns))
    if B.shape[1] == 0:
        return 0
    s = linalg.svdvals(B)
    return int(np.sum(s > tol * s[0]))


def _setup(A, y):
    A = as_matrix(A)
    y = as_vector(y, A.shape[0])
    ybar = A.T @ y
    if not np.any(ybar):
        raise ValueError('A^T y vanishes; the Krylov space is empty')
    return A, y, A.T @ A, ybar


def _finish(columns, n):
    return ExplicitBasis(columns=tuple(columns), n=n, effective_rank=effective_rank(columns))


def explicit_basis(A, y, alphas, n):
    """
    Columns ybar, f_1 ybar, G ybar, f_2 ybar, G^2 ybar, ... of KR^n, where
    G = A^T A, ybar = A^T y and f_k = (G + alpha_k I)^{-1}.
    """
    if n < 1:
        raise ValueError(f'n must be at least 1, got {n}')
    A, _, G, ybar = _setup(A, y)
    schedule = as_schedule(alphas)
    identity = np.eye(G.shape[0])

    columns = [ybar]
    power = ybar
    for i in range(2, n + 1):
        if i % 2 == 0:
            columns.append(np.linalg.solve(G + schedule.alpha(i // 2) * identity, ybar))
        else:
            power = G @ power
            columns.append(power)
    return _finish(columns, n)


def krylov_basis(A, y, k):
    """ybar, G ybar, ..., G^{k-1} ybar."""
    A, _, G, ybar = _setup(A, y)
    columns = [ybar]
    for _ in range(k - 1):
        columns.append(G @ columns[-1])
    return _finish(columns, k)


def rational_basis(A, y, alphas, k):
    """(G + alpha_i I)^{-1} ybar for i = 1..k."""
    A, _, G, ybar = _setup(A, y)
    schedule = as_schedule(alphas)
    identity = np.eye(G.shape[0])
    columns = [np.linalg.solve(G + alpha * identity, ybar) for alpha in schedule.values(k)]
    return _finish(columns, k)


def _well_conditioned_subset(AB, tol):
    _, R, perm = linalg.qr(AB, mode='economic', pivoting=True)
    pivots = np.abs(np.diag(R))
    if pivots.size == 0 or pivots[0] == 0.0:
        return np.array([], dtype=int)
    return np.sort(perm[pivots > tol * pivots[0]])


def lsq_over_subspace(A, y, basis, tol=None):
    """
    Minimize ||A x - y|| over the span of ``basis``.

    Columns are normalized and, when A B is rank deficient, truncated to the
    pivoted subset whose QR pivots exceed ``tol`` relative to the first.
    Returns ``(x, residual_norm)``.
    """
    tol = ratkryl_setting('RANK_TOL') if tol is None else tol
    A = as_matrix(A)
    y = as_vector(y, A.shape[0])
    B = _normalized(basis.matrix)
    if B.shape[1] == 0:
        return np.zeros(A.shape[1]), float(np.linalg.norm(y))

    AB = A @ B
    keep = _well_conditioned_subset(AB, tol)
    if keep.size < B.shape[1]:
        logger.debug('oracle: kept %d of %d basis columns', keep.size, B.shape[1])
    if keep.size == 0:
        return np.zeros(A.shape[1]), float(np.linalg.norm(y))

    c = dense_least_squares(AB[:, keep], y, tol=0.0)
    x = B[:, keep] @ c
    return x, float(np.linalg.norm(A @ x - y))


def subspace_condition(A, basis):
    """sigma_min / sigma_max of A B with B the column-normalized basis."""
    A = as_matrix(A)
    s = linalg.svdvals(A @ _normalized(basis.matrix))
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def detect_breakdown(A, y, alphas, n_max):
    """Smallest n <= n_max at which dim KR^n < n, or None."""
    full = explicit_basis(A, y, alphas, n_max)
    for n in range(1, n_max + 1):
        if effective_rank(full.columns[:n]) < n:
            return n
    return None
