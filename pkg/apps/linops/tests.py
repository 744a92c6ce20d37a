from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from core.conf import ratkryl_setting
from core.exceptions import BreakdownError, DimensionMismatchError, NearSingularError

from .operators import dense_least_squares, gram_apply, matvec, orthonormalize_against
from .tikhonov import tikhonov_factorize, tikhonov_solve_multi


class MatvecTests(SimpleTestCase):

    def test_identity(self):
        assert_array_equal(matvec(np.eye(3), [1, 2, 3]), [1, 2, 3])

    def test_zero_matrix(self):
        assert_array_equal(matvec(np.zeros((2, 2)), [5, 7]), [0, 0])

    def test_hand_product(self):
        assert_allclose(matvec([[1, 2], [3, 4]], [1, 1]), [3, 7])

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            matvec(np.eye(3), [1, 2])


class GramApplyTests(SimpleTestCase):

    def test_identity(self):
        assert_allclose(gram_apply(np.eye(3), [1, 2, 3]), [1, 2, 3])

    def test_diagonal(self):
        assert_allclose(gram_apply(np.diag([1.0, 2.0]), [1, 1]), [1, 4])

    def test_explicit_product(self):
        assert_allclose(gram_apply([[1, 2], [3, 4]], [1, 0]), [10, 14])

    def test_agrees_with_two_matvecs(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((30, 20))
        x = rng.standard_normal(20)
        expected = matvec(A.T, matvec(A, x))
        bound = 1e-14 * np.linalg.norm(A, 2) ** 2 * np.linalg.norm(x)
        self.assertLessEqual(np.linalg.norm(gram_apply(A, x) - expected), bound)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            gram_apply(np.eye(2), [1, 2, 3])


class TikhonovFactorizationTests(SimpleTestCase):

    def test_identity_alpha_one(self):
        F = tikhonov_factorize(np.eye(2), 1.0)
        assert_allclose(F.solve([2, 4]), [1, 2], rtol=1e-14)

    def test_scalar(self):
        F = tikhonov_factorize(np.diag([3.0]), 1.0)
        assert_allclose(F.solve([20.0]), [2.0], rtol=1e-14)

    def test_random_residual(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((5, 5))
        F = tikhonov_factorize(A, 0.1)
        rhs = rng.standard_normal(5)
        x = F.solve(rhs)
        residual = A.T @ (A @ x) + 0.1 * x - rhs
        self.assertLessEqual(np.linalg.norm(residual) / np.linalg.norm(rhs), 1e-10)

    def test_residual_on_many_random_rhs(self):
        rng = np.random.default_rng(11)
        A = rng.standard_normal((40, 25))
        for alpha in (1.0, 1e-3, 1e-6):
            F = tikhonov_factorize(A, alpha)
            for _ in range(5):
                rhs = rng.standard_normal(25)
                x = F.solve(rhs)
                residual = A.T @ (A @ x) + alpha * x - rhs
                self.assertLessEqual(np.linalg.norm(residual) / np.linalg.norm(rhs), 1e-10)

    def test_rejects_nonpositive_alpha(self):
        with self.assertRaises(ValueError):
            tikhonov_factorize(np.eye(2), 0.0)

    def test_precomputed_gram_shape_checked(self):
        with self.assertRaises(DimensionMismatchError):
            tikhonov_factorize(np.eye(3), 1.0, gram=np.eye(2))

    def test_complex_rhs(self):
        F = tikhonov_factorize(np.eye(2), 1.0)
        assert_allclose(F.solve(np.array([2 + 2j, 4j])), [1 + 1j, 2j], rtol=1e-14)


class TikhonovSolveMultiTests(SimpleTestCase):

    def test_identity_two_rhs(self):
        F = tikhonov_factorize(np.eye(2), 1.0)
        s, t = tikhonov_solve_multi(F, [[2, 0], [0, 4]])
        assert_allclose(s, [1, 0], atol=1e-15)
        assert_allclose(t, [0, 2], atol=1e-15)

    def test_singleton_matches_single_solve(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((8, 6))
        F = tikhonov_factorize(A, 0.5)
        rhs = rng.standard_normal(6)
        (x,) = tikhonov_solve_multi(F, [rhs])
        assert_array_equal(x, F.solve(rhs))

    def test_two_random_rhs(self):
        rng = np.random.default_rng(6)
        A = rng.standard_normal((12, 12))
        F = tikhonov_factorize(A, 0.01)
        rhs_list = [rng.standard_normal(12), rng.standard_normal(12)]
        for rhs, x in zip(rhs_list, tikhonov_solve_multi(F, rhs_list)):
            residual = A.T @ (A @ x) + 0.01 * x - rhs
            self.assertLessEqual(np.linalg.norm(residual) / np.linalg.norm(rhs), 1e-10)

    def test_dimension_mismatch(self):
        F = tikhonov_factorize(np.eye(2), 1.0)
        with self.assertRaises(DimensionMismatchError):
            tikhonov_solve_multi(F, [[1, 2, 3]])


class DenseLeastSquaresTests(SimpleTestCase):

    def test_identity(self):
        assert_allclose(dense_least_squares(np.eye(3), [1, 2, 3]), [1, 2, 3], rtol=1e-14)

    def test_single_column_mean(self):
        assert_allclose(dense_least_squares(np.ones((2, 1)), [0, 2]), [1.0], rtol=1e-14)

    def test_recovers_consistent_solution(self):
        rng = np.random.default_rng(1)
        B = rng.standard_normal((20, 4))
        c_star = rng.standard_normal(4)
        assert_allclose(dense_least_squares(B, B @ c_star), c_star, atol=1e-10)

    def test_residual_orthogonal_to_columns(self):
        rng = np.random.default_rng(2)
        B = rng.standard_normal((50, 7))
        y = rng.standard_normal(50)
        c = dense_least_squares(B, y)
        inner = B.T @ (B @ c - y)
        bound = 1e-8 * np.linalg.norm(B, 2) * np.linalg.norm(y)
        self.assertLessEqual(np.max(np.abs(inner)), bound)

    def test_rank_deficient(self):
        B = np.column_stack([np.arange(5.0), 2 * np.arange(5.0)])
        with self.assertRaises(NearSingularError) as ctx:
            dense_least_squares(B, np.ones(5))
        self.assertLessEqual(ctx.exception.pivot_ratio, 1e-12)


class OrthonormalizeAgainstTests(SimpleTestCase):

    def test_empty_basis(self):
        q, norm = orthonormalize_against([1.0, 0.0], [])
        assert_allclose(q, [1, 0])
        self.assertAlmostEqual(norm, 1.0)

    def test_two_dimensional(self):
        v = np.array([1.0, 1.0]) / np.sqrt(2)
        q, norm = orthonormalize_against(v, [np.array([1.0, 0.0])])
        assert_allclose(q, [0, 1], atol=1e-15)
        self.assertAlmostEqual(norm, 1 / np.sqrt(2))

    def test_dependent_input_breaks_down(self):
        Q = [np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])]
        with self.assertRaises(BreakdownError):
            orthonormalize_against(np.array([3.0, -2.0, 0.0]), Q)

    def test_random_orthonormality(self):
        rng = np.random.default_rng(4)
        n = 200
        Q = []
        for _ in range(40):
            q, _ = orthonormalize_against(rng.standard_normal(n), Q)
            Q.append(q)
        q, _ = orthonormalize_against(rng.standard_normal(n), Q)
        self.assertLessEqual(np.max(np.abs(np.array(Q) @ q)), 1e-10)
        self.assertLessEqual(abs(np.linalg.norm(q) - 1.0), 1e-12)


class RatkrylSettingTests(SimpleTestCase):

    def test_reads_project_settings(self):
        with self.settings(RATKRYL={'GUARD_TOL': 1e-10}):
            self.assertEqual(ratkryl_setting('GUARD_TOL'), 1e-10)
            self.assertEqual(ratkryl_setting('RANK_TOL'), 1e-10)

    def test_defaults_without_django(self):
        with mock.patch('core.conf.settings', None):
            self.assertEqual(ratkryl_setting('GUARD_TOL'), 1e-14)
            self.assertEqual(ratkryl_setting('DEFAULT_N_MAX'), 200)

    def test_unknown_setting(self):
        with self.assertRaises(KeyError):
            ratkryl_setting('NO_SUCH_SETTING')
