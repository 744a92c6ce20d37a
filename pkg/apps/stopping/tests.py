from types import SimpleNamespace

import numpy as np
from django.test import SimpleTestCase

from .rules import (
    Budget,
    Composite,
    Discrepancy,
    OracleBest,
    budget,
    discrepancy,
    oracle_best,
    replay,
    should_stop,
)


def _trace(residuals, errors=None):
    errors = errors or [None] * len(residuals)
    entries = [
        SimpleNamespace(n=n, residual=res, error=err)
        for n, (res, err) in enumerate(zip(residuals, errors), start=1)
    ]
    return SimpleNamespace(entries=entries)


def _prefix(trace, k):
    return SimpleNamespace(entries=trace.entries[:k])


class DiscrepancyTests(SimpleTestCase):

    def test_stops_at_first_residual_below_level(self):
        rule = Discrepancy(tau=2.0, delta_abs=0.5)
        trace = _trace([5.0, 3.0, 0.9])
        self.assertFalse(should_stop(rule, _prefix(trace, 1)).stop)
        self.assertFalse(should_stop(rule, _prefix(trace, 2)).stop)
        decision = should_stop(rule, trace)
        self.assertTrue(decision.stop)
        self.assertEqual(decision.reason, 'discrepancy')

    def test_replay_finds_first_index(self):
        n, decision = replay(Discrepancy(tau=2.0, delta_abs=0.5), _trace([5.0, 3.0, 0.9, 0.5]))
        self.assertEqual(n, 3)
        self.assertEqual(decision.reason, 'discrepancy')

    def test_tau_must_exceed_one(self):
        with self.assertRaises(ValueError):
            Discrepancy(tau=1.0, delta_abs=0.1)
        with self.assertRaises(ValueError):
            discrepancy(0.1, tau=0.5)

    def test_negative_noise_level_rejected(self):
        with self.assertRaises(ValueError):
            Discrepancy(tau=1.1, delta_abs=-1.0)

    def test_empty_trace_rejected(self):
        with self.assertRaises(ValueError):
            should_stop(Discrepancy(tau=1.1, delta_abs=1.0), _trace([]))

    def test_zero_noise_needs_budget(self):
        trace = _trace([1.0, 1e-8, 1e-15, 1e-16])
        n, _ = replay(Discrepancy(tau=1.01, delta_abs=0.0), trace)
        self.assertIsNone(n)
        n, decision = replay(discrepancy(0.0, tau=1.01, n_max=3), trace)
        self.assertEqual(n, 3)
        self.assertEqual(decision.reason, 'budget')

    def test_stop_index_weakly_decreasing_in_noise_level(self):
        residuals = list(np.geomspace(10.0, 1e-6, 25))
        trace = _trace(residuals)
        last = None
        for delta in np.geomspace(1e-7, 5.0, 30):
            n, _ = replay(discrepancy(delta, tau=1.01, n_max=100), trace)
            n = n or len(residuals) + 1
            if last is not None:
                self.assertLessEqual(n, last)
            last = n

    def test_deterministic_and_side_effect_free(self):
        rule = discrepancy(0.5, tau=1.1)
        trace = _trace([5.0, 3.0, 0.9])
        before = [entry.residual for entry in trace.entries]
        self.assertEqual(should_stop(rule, trace), should_stop(rule, trace))
        self.assertEqual([entry.residual for entry in trace.entries], before)


class BudgetTests(SimpleTestCase):

    def test_stops_at_n_max(self):
        rule = budget(2)
        trace = _trace([3.0, 2.0, 1.0])
        self.assertFalse(should_stop(rule, _prefix(trace, 1)).stop)
        self.assertEqual(should_stop(rule, _prefix(trace, 2)).reason, 'budget')

    def test_n_max_positive(self):
        with self.assertRaises(ValueError):
            Budget(0)


class OracleBestTests(SimpleTestCase):

    def test_runs_to_budget_and_picks_argmin(self):
        rule = oracle_best(np.zeros(2), n_max=3)
        trace = _trace([1.0, 1.0, 1.0], errors=[3.0, 1.0, 2.0])
        self.assertFalse(should_stop(rule, _prefix(trace, 2)).stop)
        self.assertEqual(should_stop(rule, trace).reason, 'oracle_best')
        self.assertEqual(OracleBest.best_index(trace), 2)

    def test_no_errors_recorded(self):
        self.assertIsNone(OracleBest.best_index(_trace([1.0])))


class CompositeTests(SimpleTestCase):

    def test_first_firing_member_names_reason(self):
        rule = Composite([Discrepancy(1.5, 1.0), Budget(3)])
        n, decision = replay(rule, _trace([5.0, 1.2, 1.0]))
        self.assertEqual((n, decision.reason), (2, 'discrepancy'))
        n, decision = replay(rule, _trace([5.0, 4.0, 3.0, 2.0]))
        self.assertEqual((n, decision.reason), (3, 'budget'))

    def test_aggregates_budget_and_exact_solution(self):
        x = np.ones(3)
        rule = Composite([Budget(10), OracleBest(x, 4)])
        self.assertEqual(rule.n_max, 4)
        self.assertIs(rule.x_exact, rule.rules[1].x_exact)

    def test_empty_rejected(self):
        with self.assertRaises(ValueError):
            Composite([])

    def test_default_factory_has_budget(self):
        self.assertEqual(discrepancy(0.1).n_max, 200)
