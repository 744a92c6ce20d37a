"""
Mixed rational Krylov space KR^n: Arnoldi basis construction and the
Lanczos-type short recursion for the least-squares iterates.

Step n = 1 is the initialization with q_1 = A^T y / ||A^T y||. Even steps
n = 2k are rational and add (A^T A + alpha_k I)^{-1} q_{n-1}; odd steps
n >= 3 are polynomial and add A^T A q_{n-1}.
"""
import logging
from dataclasses import dataclass

import numpy as np

from apps.linops import as_matrix, as_vector, orthonormalize_against, tikhonov_factorize
from core.exceptions import BreakdownError, FactorizationError

from .schedule import as_schedule
from .trace import SolverRun

logger = logging.getLogger(__name__)


class _MixedBasisBuilder:
    """Orthonormal basis of KR^n grown one vector per step, with A q_i cached."""

    def __init__(self, A, ybar, schedule, gram=None):
        self.A = A
        self.schedule = schedule
        self.gram = gram
        q1 = ybar / np.linalg.norm(ybar)
        self.Q = [q1]
        self.AQ = [A @ q1]
        self.alphas_used = []

    def extend(self, n):
        """Add q_n. Raises BreakdownError, FactorizationError or IndexError."""
        if n % 2 == 0:
            alpha = self.schedule.alpha(n // 2)
            if self.gram is None:
                self.gram = self.A.T @ self.A
            v = tikhonov_factorize(self.A, alpha, gram=self.gram).solve(self.Q[-1])
            self.alphas_used.append(alpha)
        else:
            v = self.A.T @ self.AQ[-1]
        q, _ = orthonormalize_against(v, self.Q)
        self.Q.append(q)
        self.AQ.append(self.A @ q)
        return q

    def inner(self, i, j):
        """<q_i, A^T A q_j> evaluated as <A q_i, A q_j> (1-based indices)."""
        return float(self.AQ[i - 1] @ self.AQ[j - 1])


@dataclass
class KrylovBasis:
    Q: np.ndarray
    T: np.ndarray
    alphas_used: list
    breakdown: bool = False
    breakdown_step: int | None = None

    @property
    def dimension(self):
        return self.Q.shape[1]

    @staticmethod
    def forbidden_mask(k):
        """
        Entries of the k x k projected matrix that vanish in exact arithmetic.

        Below the diagonal (1-based): column j even is zero from row j+2 on,
        column j odd is zero from row j+3 on. The pattern is mirrored above.
        """
        m = np.arange(1, k + 1)[:, np.newaxis]
        j = np.arange(1, k + 1)[np.newaxis, :]
        lower = np.where(j % 2 == 0, m >= j + 2, m >= j + 3)
        return lower | lower.T

    def pentadiagonal_defect(self):
        """Largest forbidden entry of T relative to max |T|."""
        scale = np.max(np.abs(self.T))
        if scale == 0.0:
            return 0.0
        mask = self.forbidden_mask(self.dimension)
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(self.T[mask])) / scale)


def arnoldi_kr(A, y, alphas, n_max):
    """
    Orthonormal basis of KR^{n_max} by Gram-Schmidt with reorthogonalization.

    Stops early on breakdown and returns the basis built so far with the
    ``breakdown`` flag set and the failing step recorded.
    """
    A = as_matrix(A)
    y = as_vector(y, A.shape[0])
    if n_max < 1:
        raise ValueError(f'n_max must be at least 1, got {n_max}')
    ybar = A.T @ y
    if not np.any(ybar):
        raise ValueError('A^T y vanishes; the Krylov space is empty')

    builder = _MixedBasisBuilder(A, ybar, as_schedule(alphas))
    broke, broke_at = False, None
    for n in range(2, n_max + 1):
        try:
            builder.extend(n)
        except BreakdownError as exc:
            logger.warning('arnoldi_kr: %s', exc)
            broke, broke_at = True, n
            break
        except FactorizationError as exc:
            logger.warning('arnoldi_kr: %s', exc)
            broke, broke_at = True, n
            break
        except IndexError:
            logger.info('arnoldi_kr: alpha schedule exhausted at step %d', n)
            break

    AQ = np.column_stack(builder.AQ)
    return KrylovBasis(
        Q=np.column_stack(builder.Q),
        T=AQ.T @ AQ,
        alphas_used=list(builder.alphas_used),
        breakdown=broke,
        breakdown_step=broke_at,
    )


def lanczos_kr(A, y, alphas, stop, x_exact=None, keep_states=False):
    """
    Least-squares iterates over KR^n by the Lanczos-type recursion.

    Only the last two basis vectors enter the update of x, but the full basis
    is kept for reorthogonalization.
    """
    schedule = as_schedule(alphas)
    run = SolverRun('lanczos_kr', A, y, stop, x_exact=x_exact, keep_states=keep_states)
    A, ybar = run.A, run.ybar
    if not np.any(ybar):
        raise ValueError('A^T y vanishes; the Krylov space is empty')

    basis = _MixedBasisBuilder(A, ybar, schedule, gram=run.gram)

    def residual(x):
        return A.T @ (A @ x) - ybar

    tau = 1.0 / basis.inner(1, 1)
    x = np.linalg.norm(ybar) * tau * basis.Q[0]
    p = tau * basis.Q[0]
    p_old = None
    tau_old = sigma = beta = 0.0

    if run.record(1, x, r=residual(x), p=p):
        return run.finish()

    for n in range(2, run.n_cap + 1):
        try:
            basis.extend(n)
        except IndexError:
            return run.finish('budget')
        except (BreakdownError, FactorizationError) as exc:
            return run.breakdown(n, f'({exc})')
        q = basis.Q[-1]

        if n % 2 == 0:
            kappa = basis.inner(n, n)
            beta = basis.inner(n - 1, n)
            tau_old = tau
            denom = kappa - tau * beta ** 2
            if run.tiny(denom, run.op_norm):
                return run.breakdown(n, 'in the rational coefficient recursion')
            tau = 1.0 / denom
            sigma = -tau * beta
            p_old = p
            p = sigma * p + tau * q
            xi = -beta * float(x @ basis.Q[n - 2])
        else:
            beta_old = beta
            kappa = basis.inner(n, n)
            beta = basis.inner(n - 1, n)
            gamma = basis.inner(n - 2, n)
            M = np.array([
                [0.0, gamma, 1.0],
                [1.0, beta, tau_old * beta_old],
                [beta * tau + gamma * sigma * tau_old, kappa, tau_old * gamma],
            ])
            # singular M: condition number at or beyond 1 / GUARD_TOL
            if not np.all(np.isfinite(M)) or np.linalg.cond(M) * run.guard_tol >= 1.0:
                return run.breakdown(n, 'in the Krylov coefficient system')
            tau_old = tau
            sigma, tau, eta = np.linalg.solve(M, [0.0, 0.0, 1.0])
            p_new = sigma * p + eta * p_old + tau * q
            p_old = p
            p = p_new
            xi = -gamma * float(x @ basis.Q[n - 3]) - beta * float(x @ basis.Q[n - 2])

        x = x + xi * p
        if run.record(n, x, r=residual(x), p=p, p_old=p_old):
            break
    return run.finish()
