"""
Stopping rules shared by every iterative solver.

A rule looks only at the trace recorded so far (``trace.entries``, each
with ``n``, ``residual`` and ``error``) and is free of side effects.
"""
import logging
from typing import NamedTuple

import numpy as np

from core.conf import ratkryl_setting

logger = logging.getLogger(__name__)


class StopDecision(NamedTuple):
    stop: bool
    reason: str = None


CONTINUE = StopDecision(False)


class StoppingRule:
    """Base class: subclasses implement ``should_stop``."""

    @property
    def x_exact(self):
        return None

    @property
    def n_max(self):
        return None

    def should_stop(self, trace):
        raise NotImplementedError


class Discrepancy(StoppingRule):
    """
    Morozov's discrepancy principle.

    Stops at the first iterate with ``||A x_n - y|| <= tau * delta_abs``.
    """

    def __init__(self, tau, delta_abs):
        if not tau > 1.0:
            raise ValueError(f'discrepancy principle needs tau > 1, got {tau}')
        if delta_abs < 0:
            raise ValueError(f'noise level must be nonnegative, got {delta_abs}')
        self.tau = float(tau)
        self.delta_abs = float(delta_abs)

    def __repr__(self):
        return f'Discrepancy(tau={self.tau}, delta_abs={self.delta_abs:.3e})'

    def should_stop(self, trace):
        if not trace.entries:
            raise ValueError('discrepancy principle needs at least one recorded iterate')
        residual = trace.entries[-1].residual
        logger.debug('discrepancy = %.3e, tau * delta = %.3e', residual, self.tau * self.delta_abs)
        if residual <= self.tau * self.delta_abs:
            return StopDecision(True, 'discrepancy')
        return CONTINUE


class Budget(StoppingRule):
    """Stops once iteration ``n_max`` has been recorded."""

    def __init__(self, n_max):
        if int(n_max) < 1:
            raise ValueError(f'n_max must be at least 1, got {n_max}')
        self._n_max = int(n_max)

    def __repr__(self):
        return f'Budget(n_max={self._n_max})'

    @property
    def n_max(self):
        return self._n_max

    def should_stop(self, trace):
        if trace.entries and trace.entries[-1].n >= self._n_max:
            return StopDecision(True, 'budget')
        return CONTINUE


class OracleBest(Budget):
    """
    Runs to ``n_max``; the winning iterate is picked afterwards as the one
    closest to the exact solution (see ``best_index``).
    """

    def __init__(self, x_exact, n_max):
        super().__init__(n_max)
        self._x_exact = np.asarray(x_exact, dtype=float)

    def __repr__(self):
        return f'OracleBest(n_max={self.n_max})'

    @property
    def x_exact(self):
        return self._x_exact

    def should_stop(self, trace):
        if super().should_stop(trace).stop:
            return StopDecision(True, 'oracle_best')
        return CONTINUE

    @staticmethod
    def best_index(trace):
        """Index n of the recorded iterate with the smallest error."""
        scored = [entry for entry in trace.entries if entry.error is not None]
        if not scored:
            return None
        return min(scored, key=lambda entry: entry.error).n


class Composite(StoppingRule):
    """Stops as soon as any member stops; the first member to fire names the reason."""

    def __init__(self, rules):
        self.rules = list(rules)
        if not self.rules:
            raise ValueError('composite rule needs at least one member')

    def __repr__(self):
        return f'Composite({self.rules!r})'

    @property
    def x_exact(self):
        for rule in self.rules:
            if rule.x_exact is not None:
                return rule.x_exact
        return None

    @property
    def n_max(self):
        budgets = [rule.n_max for rule in self.rules if rule.n_max is not None]
        return min(budgets) if budgets else None

    def should_stop(self, trace):
        for rule in self.rules:
            decision = rule.should_stop(trace)
            if decision.stop:
                return decision
        return CONTINUE


# ============================================================================
# FACTORIES
# ============================================================================

def discrepancy(delta_abs, tau=None, n_max=None):
    """Discrepancy principle, always composed with a budget."""
    tau = ratkryl_setting('DEFAULT_TAU') if tau is None else tau
    n_max = ratkryl_setting('DEFAULT_N_MAX') if n_max is None else n_max
    return Composite([Discrepancy(tau, delta_abs), Budget(n_max)])


def budget(n_max):
    return Budget(n_max)


def oracle_best(x_exact, n_max=None):
    n_max = ratkryl_setting('DEFAULT_N_MAX') if n_max is None else n_max
    return OracleBest(x_exact, n_max)


def should_stop(rule, trace_so_far):
    """Evaluate ``rule`` on the trace recorded so far."""
    return rule.should_stop(trace_so_far)


class _TracePrefix:
    def __init__(self, entries):
        self.entries = entries


def replay(rule, trace):
    """
    Apply ``rule`` post hoc to a finished trace.

    Returns ``(n, decision)`` for the first prefix at which the rule fires,
    or ``(None, CONTINUE)``.
    """
    for k in range(1, len(trace.entries) + 1):
        decision = rule.should_stop(_TracePrefix(trace.entries[:k]))
        if decision.stop:
            return trace.entries[k - 1].n, decision
    return None, CONTINUE
