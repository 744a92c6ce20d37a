"""
Tikhonov regularization and the aggregation method over several Tikhonov
solutions.
"""
import logging

import numpy as np

from apps.linops import as_matrix, as_vector, dense_least_squares, tikhonov_factorize
from core.exceptions import FactorizationError, GramianSingularError, NearSingularError

from .schedule import as_schedule
from .trace import SolverRun

logger = logging.getLogger(__name__)


def tikhonov(A, y, alpha, gram=None):
    """Return x_alpha = (A^T A + alpha I)^{-1} A^T y."""
    A = as_matrix(A)
    y = as_vector(y, A.shape[0])
    F = tikhonov_factorize(A, alpha, gram=gram)
    return F.solve(A.T @ y)


def tikhonov_path(A, y, alphas, stop, x_exact=None, keep_states=False):
    """
    Tikhonov regularization as an iteration over the alpha schedule:
    step k records x_{alpha_k}.
    """
    schedule = as_schedule(alphas)
    run = SolverRun('tikhonov', A, y, stop, x_exact=x_exact, keep_states=keep_states)

    for k in range(1, run.n_cap + 1):
        try:
            alpha = schedule.alpha(k)
        except IndexError:
            return run.finish('budget')
        try:
            x = tikhonov_factorize(run.A, alpha, gram=run.gram).solve(run.ybar)
        except FactorizationError as exc:
            return run.breakdown(k, str(exc))
        if run.record(k, x):
            break
    return run.finish()


# ============================================================================
# AGGREGATION
# ============================================================================

def _most_collinear_pair(columns):
    N = np.column_stack(columns)
    norms = np.linalg.norm(N, axis=0)
    norms[norms == 0.0] = 1.0
    N = N / norms
    G = np.abs(N.T @ N)
    np.fill_diagonal(G, -np.inf)
    i, j = np.unravel_index(np.argmax(G), G.shape)
    return tuple(sorted((int(i), int(j))))


def _combine(y, X, AX):
    try:
        c = dense_least_squares(np.column_stack(AX), y)
    except NearSingularError as exc:
        if len(AX) == 1:
            raise GramianSingularError(exc.pivot_ratio, (0, 0)) from exc
        raise GramianSingularError(exc.pivot_ratio, _most_collinear_pair(AX)) from exc
    return np.column_stack(X) @ c, c


def aggregate(A, y, alphas, gram=None):
    """
    Least-squares optimal combination of the Tikhonov solutions x_{alpha_i}.

    Returns ``(x, c)`` with x = sum_i c_i x_{alpha_i} minimizing ||A x - y||
    over their span. Raises GramianSingularError, naming the two most
    collinear columns (0-based), when the combination is not determined.
    """
    A = as_matrix(A)
    y = as_vector(y, A.shape[0])
    alphas = [alphas] if np.isscalar(alphas) else list(alphas)
    if not alphas:
        raise ValueError('aggregation needs at least one alpha')
    gram = A.T @ A if gram is None else gram
    ybar = A.T @ y

    X = [tikhonov_factorize(A, alpha, gram=gram).solve(ybar) for alpha in alphas]
    AX = [A @ x for x in X]
    return _combine(y, X, AX)


def aggregate_path(A, y, alphas, stop, x_exact=None, keep_states=False):
    """
    Aggregation over the first k alphas for k = 1, 2, ...; each Tikhonov
    solution is computed once and reused for every larger k.
    """
    schedule = as_schedule(alphas)
    run = SolverRun('aggregate', A, y, stop, x_exact=x_exact, keep_states=keep_states)
    X, AX = [], []

    for k in range(1, run.n_cap + 1):
        try:
            alpha = schedule.alpha(k)
        except IndexError:
            return run.finish('budget')
        try:
            x_alpha = tikhonov_factorize(run.A, alpha, gram=run.gram).solve(run.ybar)
        except FactorizationError as exc:
            return run.breakdown(k, str(exc))
        X.append(x_alpha)
        AX.append(run.A @ x_alpha)
        try:
            x, c = _combine(run.y, X, AX)
        except GramianSingularError as exc:
            return run.breakdown(k, str(exc))
        run.trace.info['tikhonov_solves'] = k
        run.trace.info['coefficients'] = c
        if run.record(k, x):
            break
    return run.finish()
