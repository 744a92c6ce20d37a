"""
Factorization of the Tikhonov matrix (A^T A + alpha I) with reuse across
right-hand sides.
"""
import logging

import numpy as np
from scipy.linalg import cho_solve, lapack

from core.conf import ratkryl_setting
from core.exceptions import DimensionMismatchError, FactorizationError

from .operators import as_matrix, as_vector

logger = logging.getLogger(__name__)


class TikhonovFactorization:
    """
    Cholesky factor of (A^T A + alpha I).

    Immutable after construction. ``solve`` and ``solve_multi`` apply the
    inverse, followed by ``refinement_steps`` rounds of iterative refinement
    whose residual is computed through A itself.
    """

    def __init__(self, A, alpha, factor, refinement_steps=0):
        self.A = A
        self.alpha = float(alpha)
        self.dimension = A.shape[1]
        self.refinement_steps = int(refinement_steps)
        self._factor = factor

    def __repr__(self):
        return f'TikhonovFactorization(alpha={self.alpha:.3e}, dimension={self.dimension})'

    def _apply_matrix(self, X):
        return self.A.T @ (self.A @ X) + self.alpha * X

    def solve(self, rhs):
        """Return x with (A^T A + alpha I) x = rhs."""
        return self.solve_multi([rhs])[0]

    def solve_multi(self, rhs_list):
        """Solve for every right-hand side with the one stored factor."""
        if not rhs_list:
            return []
        columns = [as_vector(rhs, self.dimension, allow_complex=True) for rhs in rhs_list]
        R = np.column_stack(columns)

        X = cho_solve(self._factor, R)
        for _ in range(self.refinement_steps):
            X = X + cho_solve(self._factor, R - self._apply_matrix(X))
        return [np.ascontiguousarray(X[:, i]) for i in range(X.shape[1])]


def tikhonov_factorize(A, alpha, gram=None, refinement_steps=None):
    """
    Factorize (A^T A + alpha I) for alpha > 0.

    ``gram`` may carry a precomputed A^T A so repeated factorizations for
    different alphas do not rebuild it.
    """
    A = as_matrix(A)
    alpha = float(alpha)
    if not alpha > 0.0:
        raise ValueError(f'alpha must be positive, got {alpha}')
    if refinement_steps is None:
        refinement_steps = ratkryl_setting('TIKHONOV_REFINEMENT_STEPS')

    n = A.shape[1]
    if gram is None:
        gram = A.T @ A
    elif gram.shape != (n, n):
        raise DimensionMismatchError((n, n), gram.shape, what='gram matrix')

    normal = gram + alpha * np.eye(n)
    c, info = lapack.dpotrf(normal, lower=False, clean=True)
    if info > 0:
        raise FactorizationError(alpha, int(info) - 1)
    if info < 0:
        raise FactorizationError(alpha, -1, message=f'dpotrf rejected argument {-int(info)}')

    diagonal = np.diag(c)
    bad = np.flatnonzero(~np.isfinite(diagonal) | (diagonal <= 0.0))
    if bad.size:
        raise FactorizationError(alpha, int(bad[0]))

    logger.debug('factorized Tikhonov matrix: alpha=%.3e n=%d', alpha, n)
    return TikhonovFactorization(A, alpha, (c, False), refinement_steps=refinement_steps)


def tikhonov_solve_multi(F, rhs_list):
    """One factorization, many back-substitutions."""
    return F.solve_multi(rhs_list)
