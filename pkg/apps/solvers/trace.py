"""
Per-iteration bookkeeping shared by the iterative solvers.
"""
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from apps.linops import as_matrix, as_vector
from apps.stopping import OracleBest
from core.conf import ratkryl_setting

logger = logging.getLogger(__name__)

STOP_REASONS = ('discrepancy', 'budget', 'oracle_best', 'breakdown', 'stagnation')


@dataclass(frozen=True)
class TraceEntry:
    n: int
    residual: float
    error: float | None
    time: float


@dataclass(frozen=True)
class IterationState:
    """Snapshot of the recursion variables after step n."""
    n: int
    x: np.ndarray
    r: np.ndarray | None
    p: np.ndarray | None
    p_old: np.ndarray | None
    ls_residual_norm: float


@dataclass
class SolverTrace:
    method: str
    entries: list = field(default_factory=list)
    stop_reason: str | None = None
    x: np.ndarray | None = None
    best_x: np.ndarray | None = None
    best_index: int | None = None
    states: list | None = None
    breakdown_step: int | None = None
    info: dict = field(default_factory=dict)

    @property
    def n_stop(self):
        return self.entries[-1].n if self.entries else 0

    @property
    def residuals(self):
        return np.array([entry.residual for entry in self.entries])

    @property
    def errors(self):
        return np.array([np.nan if entry.error is None else entry.error for entry in self.entries])

    @property
    def selected_index(self):
        """Iterate index the stopping rule reports as the answer."""
        if self.info.get('oracle') and self.best_index is not None:
            return self.best_index
        return self.n_stop

    @property
    def selected_x(self):
        if self.info.get('oracle') and self.best_x is not None:
            return self.best_x
        return self.x

    def entry(self, n):
        for entry in self.entries:
            if entry.n == n:
                return entry
        raise KeyError(n)


class SolverRun:
    """
    Shared state of one solver invocation on (A, y).

    Records the trace, evaluates the stopping rule and the stagnation guard,
    and caches the Gram matrix for repeated Tikhonov factorizations.
    """

    def __init__(self, method, A, y, stop, x_exact=None, keep_states=False, gram=None):
        self.method = method
        self.A = as_matrix(A)
        self.y = as_vector(y, self.A.shape[0])
        self.ybar = self.A.T @ self.y
        self.stop = stop
        self.y_norm = float(np.linalg.norm(self.y))

        exact = x_exact if x_exact is not None else getattr(stop, 'x_exact', None)
        self.x_exact = None if exact is None else as_vector(exact, self.A.shape[1])

        self.guard_tol = ratkryl_setting('GUARD_TOL')
        self.stagnation_factor = ratkryl_setting('STAGNATION_FACTOR')
        # ||A^T A||_2 <= ||A||_F^2
        self.op_norm = float(np.sum(self.A * self.A))
        self._gram = gram

        budget = getattr(stop, 'n_max', None)
        self.n_cap = int(budget) if budget else int(ratkryl_setting('DEFAULT_N_MAX'))

        self.trace = SolverTrace(method=method, states=[] if keep_states else None)
        self._keep_states = keep_states
        self._best_residual = np.inf
        self._best_error = np.inf
        self._t0 = time.perf_counter()

    @property
    def gram(self):
        if self._gram is None:
            self._gram = self.A.T @ self.A
        return self._gram

    def tiny(self, value, scale):
        """True when |value| is at or below the guard tolerance relative to scale."""
        return abs(value) <= self.guard_tol * scale

    def record(self, n, x, r=None, p=None, p_old=None):
        """
        Append iterate n to the trace. Returns True when the run must stop;
        the reason is then set on the trace.
        """
        residual = float(np.linalg.norm(self.A @ x - self.y))
        error = None
        if self.x_exact is not None:
            error = float(np.linalg.norm(x - self.x_exact))

        self.trace.entries.append(
            TraceEntry(n=n, residual=residual, error=error, time=time.perf_counter() - self._t0)
        )
        self.trace.x = x.copy()
        if error is not None and error < self._best_error:
            self._best_error = error
            self.trace.best_x = x.copy()
            self.trace.best_index = n
        if self._keep_states:
            self.trace.states.append(IterationState(
                n=n,
                x=x.copy(),
                r=None if r is None else r.copy(),
                p=None if p is None else p.copy(),
                p_old=None if p_old is None else p_old.copy(),
                ls_residual_norm=residual,
            ))
        logger.debug('%s n=%d residual=%.6e error=%s', self.method, n, residual, error)

        decision = self.stop.should_stop(self.trace)
        if decision.stop:
            self.trace.stop_reason = decision.reason
            return True
        if residual > self.stagnation_factor * self._best_residual:
            logger.warning(
                '%s stagnated at n=%d: residual %.3e exceeds %g x running minimum %.3e',
                self.method, n, residual, self.stagnation_factor, self._best_residual,
            )
            self.trace.stop_reason = 'stagnation'
            return True
        self._best_residual = min(self._best_residual, residual)
        if n >= self.n_cap:
            self.trace.stop_reason = 'budget'
            return True
        return False

    def breakdown(self, step, detail=''):
        logger.warning('%s breakdown at step %d %s', self.method, step, detail)
        self.trace.breakdown_step = step
        return self.finish('breakdown')

    def finish(self, reason=None):
        if self.trace.stop_reason is None:
            self.trace.stop_reason = reason or 'budget'
        if isinstance(self.stop, OracleBest) or self.trace.stop_reason == 'oracle_best':
            self.trace.info['oracle'] = True
            self.trace.best_index = OracleBest.best_index(self.trace)
        logger.info(
            '%s stopped: %s after %d steps', self.method, self.trace.stop_reason, self.trace.n_stop
        )
        return self.trace
