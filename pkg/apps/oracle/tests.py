import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from apps.problems import make_problem
from apps.solvers import AlphaSchedule, cgne, lanczos_kr, rational_cg
from apps.stopping import budget

from .subspaces import (
    ExplicitBasis,
    detect_breakdown,
    effective_rank,
    explicit_basis,
    krylov_basis,
    lsq_over_subspace,
    rational_basis,
)


class ExplicitBasisTests(SimpleTestCase):

    def test_single_column(self):
        A = np.array([[2.0, 0.0], [1.0, 1.0]])
        y = np.array([1.0, -1.0])
        basis = explicit_basis(A, y, None, 1)
        self.assertEqual(len(basis.columns), 1)
        assert_allclose(basis.columns[0], A.T @ y)
        self.assertEqual(basis.effective_rank, 1)

    def test_identity_collapses_to_one_direction(self):
        y = np.array([1.0, 2.0, 3.0])
        basis = explicit_basis(np.eye(3), y, [1.0], 3)
        assert_allclose(basis.columns[0], y)
        assert_allclose(basis.columns[1], y / 2)
        assert_allclose(basis.columns[2], y)
        self.assertEqual(basis.effective_rank, 1)

    def test_rational_column_is_componentwise_resolvent(self):
        # A^T A = diag(1, 2) and A^T y = (1, 1)
        A = np.diag([1.0, np.sqrt(2.0)])
        y = np.array([1.0, 1.0 / np.sqrt(2.0)])
        basis = explicit_basis(A, y, [1.0], 2)
        assert_allclose(basis.columns[0], [1.0, 1.0])
        assert_allclose(basis.columns[1], [0.5, 1.0 / 3.0])

    def test_nesting_of_polynomial_and_rational_spaces(self):
        p = make_problem('deriv2', 16)
        alphas = AlphaSchedule.paper_default()
        for k in (1, 2, 3):
            mixed = explicit_basis(p.A, p.y_exact, alphas, 2 * k)
            for part in (krylov_basis(p.A, p.y_exact, k), rational_basis(p.A, p.y_exact, alphas, k)):
                combined = mixed.columns + part.columns
                self.assertEqual(effective_rank(combined), mixed.effective_rank)


class LsqOverSubspaceTests(SimpleTestCase):

    def test_data_column_under_identity(self):
        y = np.array([3.0, -1.0, 2.0])
        x, residual = lsq_over_subspace(np.eye(3), y, explicit_basis(np.eye(3), y, None, 1))
        assert_allclose(x, y)
        self.assertLess(residual, 1e-14)

    def test_full_space_solves_exactly(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((5, 5)) + 5 * np.eye(5)
        y = rng.standard_normal(5)
        full = ExplicitBasis(columns=tuple(np.eye(5)), n=5, effective_rank=5)
        _, residual = lsq_over_subspace(A, y, full)
        self.assertLessEqual(residual, 1e-10 * np.linalg.norm(y))

    def test_residual_weakly_decreasing_as_columns_are_appended(self):
        p = make_problem('shaw', 32)
        last = np.inf
        for n in range(1, 9):
            _, residual = lsq_over_subspace(p.A, p.y_exact, explicit_basis(p.A, p.y_exact, None, n))
            self.assertLessEqual(residual, last + 1e-12 * np.linalg.norm(p.y_exact))
            last = residual

    def test_first_iterates_agree(self):
        p = make_problem('phillips', 32)
        x_oracle, _ = lsq_over_subspace(p.A, p.y_exact, explicit_basis(p.A, p.y_exact, None, 1))
        for solver in (cgne, rational_cg):
            args = (p.A, p.y_exact) if solver is cgne else (p.A, p.y_exact, None)
            trace = solver(*args, budget(1), keep_states=True)
            assert_allclose(trace.states[0].x, x_oracle, rtol=1e-12, atol=1e-12 * np.linalg.norm(x_oracle))


class DetectBreakdownTests(SimpleTestCase):

    def test_identity(self):
        self.assertEqual(detect_breakdown(np.eye(4), np.ones(4), None, 6), 2)

    def test_three_eigencomponents(self):
        self.assertEqual(detect_breakdown(np.diag([1.0, 2.0, 3.0]), np.ones(3), None, 6), 4)

    def test_generic_data_does_not_break_down(self):
        p = make_problem('gravity', 48)
        self.assertIsNone(detect_breakdown(p.A, p.y_exact, None, 8))


class OracleCertificationTests(SimpleTestCase):
    """Solver residuals equal the brute-force minimum over KR^n."""

    def _check(self, solver, p, n_max=8):
        y = p.y_exact
        trace = solver(p.A, y, AlphaSchedule.paper_default(), budget(n_max))
        checked = 0
        for entry in trace.entries:
            basis = explicit_basis(p.A, y, None, entry.n)
            if basis.effective_rank < entry.n:
                break
            _, oracle_residual = lsq_over_subspace(p.A, y, basis)
            self.assertLessEqual(
                abs(entry.residual - oracle_residual), 1e-8 * np.linalg.norm(y),
                f'{trace.method} on {p.name} at n={entry.n}',
            )
            checked += 1
        self.assertGreaterEqual(checked, 1)

    def test_rational_cg_and_lanczos_on_all_problems(self):
        for name in ('deriv2', 'shaw', 'phillips', 'gravity'):
            p = make_problem(name, 32)
            for solver in (rational_cg, lanczos_kr):
                with self.subTest(problem=name, solver=solver.__name__):
                    self._check(solver, p)

    def test_shaw_six_steps(self):
        p = make_problem('shaw', 32)
        trace = rational_cg(p.A, p.y_exact, None, budget(6))
        basis = explicit_basis(p.A, p.y_exact, None, 6)
        _, oracle_residual = lsq_over_subspace(p.A, p.y_exact, basis)
        self.assertLessEqual(
            abs(trace.entries[-1].residual - oracle_residual), 1e-8 * np.linalg.norm(p.y_exact)
        )
