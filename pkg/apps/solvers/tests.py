import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.linops import tikhonov_factorize
from apps.oracle import explicit_basis, subspace_condition
from apps.problems import make_problem
from apps.stopping import budget, discrepancy, oracle_best
from core.exceptions import GramianSingularError

from .cgne import cgne
from .direct import aggregate, aggregate_path, tikhonov, tikhonov_path
from .krylov import KrylovBasis, arnoldi_kr, lanczos_kr
from .rational_cg import (
    _rational_direction,
    _rational_direction_complex,
    rational_cg,
    rational_cg_complex_step,
)
from .schedule import AlphaSchedule, as_schedule
from .trace import SolverRun

DEFAULT_ALPHAS = AlphaSchedule.paper_default()


def _moderate_problem(size=40, seed=0):
    """A = U diag(s) V^T with singular values spread over one decade."""
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((size, size)))
    V, _ = np.linalg.qr(rng.standard_normal((size, size)))
    A = U @ np.diag(np.logspace(0.0, -1.0, size)) @ V.T
    return A, rng.standard_normal(size)


def _spd_system(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((10, 10))
    return M @ M.T + 10.0 * np.eye(10), rng.standard_normal(10)


def _well_conditioned_steps(A, y, n_max, threshold):
    """Largest n <= n_max for which A B_n keeps sigma_min / sigma_max above threshold."""
    last = 0
    for n in range(1, n_max + 1):
        if subspace_condition(A, explicit_basis(A, y, DEFAULT_ALPHAS, n)) <= threshold:
            break
        last = n
    return last


def _a_inner(A, u, v):
    return float((A @ u) @ (A @ v))


def _a_norm(A, u):
    return float(np.linalg.norm(A.T @ (A @ u)))


class AlphaScheduleTests(SimpleTestCase):

    def test_paper_default(self):
        assert_allclose(DEFAULT_ALPHAS.values(3), [1e-2, 1e-3, 1e-4])
        self.assertEqual(DEFAULT_ALPHAS.descriptor(), 'paper_default')

    def test_geometric(self):
        schedule = AlphaSchedule.geometric(0.1, 2.0, 0)
        assert_allclose(schedule.values(3), [0.05, 0.025, 0.0125])
        assert_allclose(AlphaSchedule.geometric(0.1, 10.0, 4).alpha(1), 100.0)
        self.assertIn('q=2', schedule.descriptor())

    def test_values_positive_and_distinct(self):
        for schedule in (DEFAULT_ALPHAS, AlphaSchedule.geometric(0.1, 10.0, -4)):
            values = schedule.values(12)
            self.assertTrue(all(v > 0 for v in values))
            self.assertEqual(len(set(values)), 12)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            AlphaSchedule.explicit([1.0, 1.0])
        with self.assertRaises(ValueError):
            AlphaSchedule.explicit([0.0])
        with self.assertRaises(ValueError):
            AlphaSchedule.geometric(0.1, 1.0, 0)
        with self.assertRaises(ValueError):
            AlphaSchedule('harmonic')

    def test_explicit_is_finite(self):
        schedule = as_schedule([0.5, 0.25])
        self.assertEqual(schedule.alpha(2), 0.25)
        with self.assertRaises(IndexError):
            schedule.alpha(3)


class TikhonovTests(SimpleTestCase):

    def test_identity(self):
        y = np.array([2.0, -4.0, 1.0])
        assert_allclose(tikhonov(np.eye(3), y, 1.0), y / 2)

    def test_scalar(self):
        assert_allclose(tikhonov(np.array([[2.0]]), [10.0], 1.0), [4.0])

    def test_large_alpha_bound(self):
        p = make_problem('phillips', 32)
        x = tikhonov(p.A, p.y_exact, 1e6)
        self.assertLessEqual(np.linalg.norm(x), np.linalg.norm(p.A.T @ p.y_exact) / 1e6)

    def test_path_follows_schedule(self):
        p = make_problem('deriv2', 32)
        trace = tikhonov_path(p.A, p.y_exact, DEFAULT_ALPHAS, budget(3))
        self.assertEqual([entry.n for entry in trace.entries], [1, 2, 3])
        assert_allclose(trace.x, tikhonov(p.A, p.y_exact, 1e-4), rtol=1e-10)
        self.assertEqual(trace.stop_reason, 'budget')

    def test_path_stops_by_discrepancy(self):
        p = make_problem('phillips', 64)
        delta = 0.01 * np.linalg.norm(p.y_exact)
        rng = np.random.default_rng(0)
        noise = rng.standard_normal(64)
        y = p.y_exact + delta * noise / np.linalg.norm(noise)
        trace = tikhonov_path(p.A, y, AlphaSchedule.geometric(1.0, 2.0, 0), discrepancy(delta))
        self.assertEqual(trace.stop_reason, 'discrepancy')
        self.assertLessEqual(trace.entries[-1].residual, 1.01 * delta)


class CgneTests(SimpleTestCase):

    def test_identity_one_step(self):
        y = np.array([1.0, 2.0, -1.0])
        trace = cgne(np.eye(3), y, budget(1))
        assert_allclose(trace.x, y)
        self.assertLess(trace.entries[0].residual, 1e-14)

    def test_finite_termination(self):
        rng = np.random.default_rng(11)
        A = rng.standard_normal((6, 6)) + 3 * np.eye(6)
        y = rng.standard_normal(6)
        trace = cgne(A, y, budget(6))
        self.assertLessEqual(trace.residuals.min(), 1e-8 * np.linalg.norm(y))

    def test_shaw_residual_strictly_decreasing(self):
        p = make_problem('shaw', 32)
        trace = cgne(p.A, p.y_exact, budget(10))
        residuals = trace.residuals
        self.assertGreaterEqual(len(residuals), 8)
        self.assertTrue(np.all(np.diff(residuals) < 0))

    def test_zero_normal_data(self):
        A = np.array([[1.0, 0.0], [0.0, 0.0]])
        trace = cgne(A, [0.0, 1.0], budget(5))
        assert_allclose(trace.x, [0.0, 0.0])
        self.assertEqual(trace.stop_reason, 'stagnation')

    def test_indices_strictly_increasing(self):
        p = make_problem('gravity', 32)
        trace = cgne(p.A, p.y_exact, budget(7), x_exact=p.x_exact)
        self.assertEqual([entry.n for entry in trace.entries], list(range(1, 8)))
        self.assertTrue(all(entry.error is not None for entry in trace.entries))


class AggregateTests(SimpleTestCase):

    def test_single_alpha_coefficient(self):
        p = make_problem('phillips', 32)
        x_alpha = tikhonov(p.A, p.y_exact, 1e-2)
        Ax = p.A @ x_alpha
        _, c = aggregate(p.A, p.y_exact, [1e-2])
        assert_allclose(c, [(p.y_exact @ Ax) / (Ax @ Ax)], rtol=1e-10)

    def test_identity_recovers_data(self):
        y = np.array([1.0, -2.0, 3.0])
        x, _ = aggregate(np.eye(3), y, [0.5, 2.0])
        assert_allclose(x, y, atol=1e-12)

    def test_beats_each_tikhonov_solution(self):
        p = make_problem('phillips', 64)
        y = p.y_exact
        x, _ = aggregate(p.A, y, DEFAULT_ALPHAS.values(3))
        singles = [np.linalg.norm(p.A @ tikhonov(p.A, y, a) - y) for a in DEFAULT_ALPHAS.values(3)]
        self.assertLessEqual(np.linalg.norm(p.A @ x - y), min(singles) + 1e-12 * np.linalg.norm(y))

    def test_dominance_over_growing_alpha_sets(self):
        p = make_problem('phillips', 64)
        y = p.y_exact
        last = np.inf
        for k in range(1, 6):
            alphas = DEFAULT_ALPHAS.values(k)
            x, _ = aggregate(p.A, y, alphas)
            residual = np.linalg.norm(p.A @ x - y)
            singles = [np.linalg.norm(p.A @ tikhonov(p.A, y, a) - y) for a in alphas]
            self.assertLessEqual(residual, min(singles) + 1e-12 * np.linalg.norm(y))
            self.assertLessEqual(residual, last + 1e-12 * np.linalg.norm(y))
            last = residual

    def test_duplicate_columns_named(self):
        p = make_problem('deriv2', 16)
        with self.assertRaises(GramianSingularError) as ctx:
            aggregate(p.A, p.y_exact, [1e-2, 1e-3, 1e-2])
        self.assertEqual(ctx.exception.columns, (0, 2))

    def test_path_reuses_solutions(self):
        p = make_problem('phillips', 64)
        trace = aggregate_path(p.A, p.y_exact, DEFAULT_ALPHAS, budget(4))
        self.assertEqual(trace.info['tikhonov_solves'], 4)
        x, c = aggregate(p.A, p.y_exact, DEFAULT_ALPHAS.values(4))
        assert_allclose(trace.x, x, rtol=1e-8, atol=1e-10)
        self.assertEqual(len(trace.info['coefficients']), 4)

    def test_rational_space_beats_mixed_space(self):
        p = make_problem('phillips', 64)
        y = p.y_exact
        mixed = rational_cg(p.A, y, DEFAULT_ALPHAS, budget(5))
        for entry in mixed.entries:
            x, _ = aggregate(p.A, y, DEFAULT_ALPHAS.values(entry.n))
            self.assertLessEqual(np.linalg.norm(p.A @ x - y), entry.residual + 1e-10 * np.linalg.norm(y))


class ArnoldiTests(SimpleTestCase):

    def test_identity_breaks_down_at_two(self):
        basis = arnoldi_kr(np.eye(4), np.ones(4), [1.0], 5)
        self.assertTrue(basis.breakdown)
        self.assertEqual(basis.breakdown_step, 2)
        self.assertEqual(basis.dimension, 1)

    def test_three_eigencomponents(self):
        basis = arnoldi_kr(np.diag([1.0, 2.0, 3.0]), np.ones(3), DEFAULT_ALPHAS, 6)
        self.assertEqual(basis.dimension, 3)
        self.assertEqual(basis.breakdown_step, 4)

    def test_pentadiagonal_structure(self):
        p = make_problem('gravity', 48)
        basis = arnoldi_kr(p.A, p.y_exact, DEFAULT_ALPHAS, 12)
        self.assertFalse(basis.breakdown)
        self.assertEqual(basis.dimension, 12)
        assert_allclose(basis.Q.T @ basis.Q, np.eye(12), atol=1e-8)
        assert_allclose(basis.T, basis.T.T, atol=1e-10 * np.max(np.abs(basis.T)))
        self.assertLessEqual(basis.pentadiagonal_defect(), 1e-8)
        self.assertEqual(basis.alphas_used, DEFAULT_ALPHAS.values(6))

    def test_forbidden_mask(self):
        mask = KrylovBasis.forbidden_mask(5)
        # column 1 keeps rows 2 and 3, column 2 keeps only row 3
        self.assertFalse(mask[2, 0])
        self.assertTrue(mask[3, 0])
        self.assertTrue(mask[3, 1])
        self.assertFalse(mask[2, 1])
        self.assertTrue(mask[0, 3])
        self.assertFalse(mask.diagonal().any())


class LanczosTests(SimpleTestCase):

    def test_initial_iterate(self):
        trace = lanczos_kr(np.diag([1.0, 2.0]), [1.0, 1.0], DEFAULT_ALPHAS, budget(1))
        assert_allclose(trace.x, np.array([1.0, 2.0]) * 5.0 / 17.0)

    def test_identity(self):
        y = np.array([1.0, -1.0, 2.0])
        trace = lanczos_kr(np.eye(3), y, DEFAULT_ALPHAS, discrepancy(1e-12, n_max=5))
        assert_allclose(trace.x, y)
        self.assertEqual(trace.n_stop, 1)
        self.assertEqual(trace.stop_reason, 'discrepancy')

    def test_residual_non_increasing(self):
        A, y = _moderate_problem()
        residuals = lanczos_kr(A, y, DEFAULT_ALPHAS, budget(12)).residuals
        self.assertTrue(np.all(np.diff(residuals) <= 1e-10 * np.linalg.norm(y)))
        for name in ('deriv2', 'phillips'):
            p = make_problem(name, 64)
            steps = _well_conditioned_steps(p.A, p.y_exact, 12, 1e-8)
            residuals = lanczos_kr(p.A, p.y_exact, DEFAULT_ALPHAS, budget(12)).residuals[:steps]
            self.assertTrue(np.all(np.diff(residuals) <= 1e-10 * np.linalg.norm(p.y_exact)), name)

    def test_directions_conjugate(self):
        A, y = _moderate_problem()
        trace = lanczos_kr(A, y, DEFAULT_ALPHAS, budget(12), keep_states=True)
        states = trace.states
        self.assertEqual(len(states), 12)
        for n in range(1, len(states)):
            for j in range(n):
                p_n, p_j = states[n].p, states[j].p
                bound = 1e-8 * _a_norm(A, p_n) * np.linalg.norm(p_j)
                self.assertLessEqual(abs(_a_inner(A, p_n, p_j)), bound, (n + 1, j + 1))

    def _check_residual_gramian(self, A, y, n_max):
        states = lanczos_kr(A, y, DEFAULT_ALPHAS, budget(n_max), keep_states=True).states[:n_max]
        for a in states:
            for b in states:
                i, j = a.n, b.n
                if j - i >= 2 or (j == i + 1 and i % 2 == 0):
                    bound = 1e-8 * np.linalg.norm(a.r) * np.linalg.norm(b.r)
                    self.assertLessEqual(abs(a.r @ b.r), bound, (i, j))

    def test_residual_gramian_zero_pattern(self):
        A, y = _moderate_problem()
        self._check_residual_gramian(A, y, 12)

    def test_residual_gramian_on_test_problems(self):
        for name, size in (('shaw', 32), ('phillips', 64)):
            p = make_problem(name, size)
            steps = _well_conditioned_steps(p.A, p.y_exact, 12, 1e-6)
            self._check_residual_gramian(p.A, p.y_exact, steps)


class RationalCgTests(SimpleTestCase):

    def test_identity_discrepancy(self):
        y = np.array([3.0, 0.5])
        trace = rational_cg(np.eye(2), y, DEFAULT_ALPHAS, discrepancy(0.0, n_max=5), keep_states=True)
        assert_allclose(trace.x, y)
        assert_allclose(trace.states[0].r, [0.0, 0.0], atol=1e-15)
        self.assertEqual((trace.n_stop, trace.stop_reason), (1, 'discrepancy'))

    def test_identity_breakdown(self):
        y = np.arange(1.0, 6.0)
        trace = rational_cg(np.eye(5), y, DEFAULT_ALPHAS, budget(5))
        self.assertEqual(trace.stop_reason, 'breakdown')
        assert_allclose(trace.x, y, rtol=1e-12)

    def test_arnoldi_identity_breakdown(self):
        self.assertEqual(arnoldi_kr(np.eye(7), np.ones(7), DEFAULT_ALPHAS, 4).breakdown_step, 2)

    def test_finite_termination(self):
        reached = 0
        for seed in range(20):
            A, y = _spd_system(seed)
            trace = rational_cg(A, y, DEFAULT_ALPHAS, budget(10))
            if trace.residuals.min() <= 1e-8 * np.linalg.norm(y):
                reached += 1
        self.assertGreaterEqual(reached, 19)

    def test_matches_dense_solve(self):
        A, y = _spd_system(1)
        trace = rational_cg(A, y, DEFAULT_ALPHAS, budget(10), keep_states=True)
        best = trace.states[int(np.argmin(trace.residuals))]
        x_dense = np.linalg.solve(A, y)
        assert_allclose(best.x, x_dense, rtol=1e-6, atol=1e-8 * np.linalg.norm(x_dense))

    def test_equivalent_to_lanczos(self):
        for name, size in (('phillips', 64), ('gravity', 48)):
            p = make_problem(name, size)
            y = p.y_exact
            steps = _well_conditioned_steps(p.A, y, 10, 1e-8)
            cg = rational_cg(p.A, y, DEFAULT_ALPHAS, budget(10), keep_states=True).states
            lz = lanczos_kr(p.A, y, DEFAULT_ALPHAS, budget(10), keep_states=True).states
            for a, b in zip(cg[:steps], lz[:steps]):
                scale = max(np.linalg.norm(a.x), 1.0)
                self.assertLessEqual(np.linalg.norm(a.x - b.x), 1e-6 * scale, (name, a.n))

    def test_equivalent_to_lanczos_moderate(self):
        A, y = _moderate_problem()
        cg = rational_cg(A, y, DEFAULT_ALPHAS, budget(12), keep_states=True).states
        lz = lanczos_kr(A, y, DEFAULT_ALPHAS, budget(12), keep_states=True).states
        self.assertEqual(len(cg), 12)
        for a, b in zip(cg, lz):
            assert_allclose(a.x, b.x, rtol=1e-8, atol=1e-10)

    def _check_conjugacy(self, A, states):
        for n, state in enumerate(states):
            p_n, r_n = state.p, state.r
            for j in range(n):
                p_j = states[j].p
                bound = 1e-8 * _a_norm(A, p_n) * np.linalg.norm(p_j)
                self.assertLessEqual(abs(_a_inner(A, p_n, p_j)), bound, (state.n, j + 1))
            for j in range(n + 1):
                p_j = states[j].p
                bound = 1e-8 * np.linalg.norm(r_n) * np.linalg.norm(p_j)
                self.assertLessEqual(abs(r_n @ p_j), bound, (state.n, j + 1))

    def test_conjugacy_and_orthogonality(self):
        A, y = _moderate_problem()
        states = rational_cg(A, y, DEFAULT_ALPHAS, budget(12), keep_states=True).states
        self.assertEqual(len(states), 12)
        self._check_conjugacy(A, states)

    def test_conjugacy_on_test_problems(self):
        for name, size in (('shaw', 32), ('phillips', 64)):
            p = make_problem(name, size)
            steps = _well_conditioned_steps(p.A, p.y_exact, 12, 1e-6)
            states = rational_cg(p.A, p.y_exact, DEFAULT_ALPHAS, budget(12), keep_states=True).states
            self._check_conjugacy(p.A, states[:steps])

    def test_residual_recursion_tracks_true_residual(self):
        p = make_problem('deriv2', 64)
        ybar = p.A.T @ p.y_exact
        states = rational_cg(p.A, p.y_exact, DEFAULT_ALPHAS, budget(20), keep_states=True).states
        op_norm = np.linalg.norm(p.A.T @ p.A, 2)
        for state in states:
            true_r = p.A.T @ (p.A @ state.x) - ybar
            tol = 1e-10 * (op_norm * np.linalg.norm(state.x) + np.linalg.norm(ybar))
            self.assertLessEqual(np.linalg.norm(state.r - true_r), tol, state.n)

    def test_residual_dominates_cgne(self):
        for name in ('deriv2', 'shaw', 'phillips', 'gravity'):
            p = make_problem(name, 64)
            y = p.y_exact
            mixed = rational_cg(p.A, y, DEFAULT_ALPHAS, budget(12))
            plain = cgne(p.A, y, budget(12))
            for a, b in zip(mixed.entries, plain.entries):
                self.assertLessEqual(a.residual, b.residual + 1e-10 * np.linalg.norm(y), (name, a.n))

    def test_noise_free_full_budget(self):
        p = make_problem('phillips', 64)
        for solver in (rational_cg, rational_cg_complex_step):
            with self.subTest(solver=solver.__name__):
                trace = solver(p.A, p.y_exact, DEFAULT_ALPHAS, oracle_best(p.x_exact, 200), keep_states=True)
                self.assertTrue(trace.info['oracle'])
                self.assertTrue(np.all(np.isfinite(trace.residuals)))
                self.assertTrue(np.all(np.isfinite(trace.selected_x)))
                self.assertLess(np.linalg.norm(trace.selected_x - p.x_exact), np.linalg.norm(p.x_exact))
                for state in trace.states:
                    self.assertAlmostEqual(np.linalg.norm(state.p), 1.0, places=12)

    def test_residual_non_increasing(self):
        A, y = _moderate_problem()
        residuals = rational_cg(A, y, DEFAULT_ALPHAS, budget(12)).residuals
        self.assertTrue(np.all(np.diff(residuals) <= 1e-10 * np.linalg.norm(y)))
        for name in ('deriv2', 'phillips'):
            p = make_problem(name, 64)
            steps = _well_conditioned_steps(p.A, p.y_exact, 12, 1e-8)
            residuals = rational_cg(p.A, p.y_exact, DEFAULT_ALPHAS, budget(12)).residuals[:steps]
            self.assertTrue(np.all(np.diff(residuals) <= 1e-10 * np.linalg.norm(p.y_exact)), name)


class ComplexStepTests(SimpleTestCase):

    def _run(self, A, y):
        return SolverRun('check', A, y, budget(1))

    def test_direction_proportional(self):
        A, y = _moderate_problem(size=12, seed=4)
        run = self._run(A, y)
        rng = np.random.default_rng(5)
        p, r = rng.standard_normal(12), rng.standard_normal(12)
        F = tikhonov_factorize(A, 0.3)
        real = _rational_direction(run, F, p, r, A @ p)
        cplx = _rational_direction_complex(run, F, p, r, A @ p)
        scale = (real @ cplx) / (real @ real)
        assert_allclose(cplx, scale * real, rtol=1e-10, atol=1e-12 * np.linalg.norm(cplx))

    def test_identity_scalar_case(self):
        run = self._run(np.eye(3), np.ones(3))
        F = tikhonov_factorize(np.eye(3), 1.0)
        p = np.array([1.0, 0.0, 2.0])
        r = np.array([0.0, 1.0, -1.0])
        real = _rational_direction(run, F, p, r, p)
        cplx = _rational_direction_complex(run, F, p, r, p)
        assert_allclose(np.cross(real, cplx), 0.0, atol=1e-14)

    def test_diagonal_agrees(self):
        A, y = np.diag([1.0, 2.0]), np.array([1.0, 1.0])
        a = rational_cg(A, y, DEFAULT_ALPHAS, budget(3), keep_states=True).states
        b = rational_cg_complex_step(A, y, DEFAULT_ALPHAS, budget(3), keep_states=True).states
        for sa, sb in zip(a, b):
            assert_allclose(sa.x, sb.x, rtol=1e-10, atol=1e-12)

    def test_deriv2_traces_agree(self):
        p = make_problem('deriv2', 64)
        y = p.y_exact
        a = rational_cg(p.A, y, DEFAULT_ALPHAS, budget(8))
        b = rational_cg_complex_step(p.A, y, DEFAULT_ALPHAS, budget(8))
        for ea, eb in zip(a.entries, b.entries):
            self.assertLessEqual(abs(ea.residual - eb.residual), 1e-8 * np.linalg.norm(y), ea.n)
