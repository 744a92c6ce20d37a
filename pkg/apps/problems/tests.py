import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose, assert_array_equal

from apps.linops import matvec
from core.exceptions import UnknownProblemError

from .generators import LinearProblem, add_noise, make_problem, problem_names, smooth_variant


def _toy_problem(A, x):
    A = np.asarray(A, dtype=float)
    x = np.asarray(x, dtype=float)
    return LinearProblem(name='toy', A=A, x_exact=x, y_exact=A @ x)


class MakeProblemTests(SimpleTestCase):

    def test_every_problem_satisfies_invariants(self):
        for name in problem_names():
            p = make_problem(name, 16)
            self.assertEqual(p.A.shape, (16, 16))
            assert_allclose(p.y_exact, matvec(p.A, p.x_exact), rtol=1e-14, atol=0)
            self.assertTrue(np.all(np.any(p.A != 0.0, axis=0)), name)
            self.assertTrue(np.all(np.isfinite(p.A)), name)

    def test_deriv2_structure(self):
        p = make_problem('deriv2', 8)
        assert_allclose(p.A, p.A.T, atol=1e-14)
        self.assertTrue(np.all(p.A <= 0.0))
        s = np.linalg.svd(p.A, compute_uv=False)
        self.assertTrue(np.all(np.diff(s) < 0))

    def test_shaw_is_severely_ill_conditioned(self):
        self.assertGreater(np.linalg.cond(make_problem('shaw', 32).A), 1e10)

    def test_condition_grows_with_size(self):
        conds = [np.linalg.cond(make_problem('deriv2', n).A) for n in (16, 32, 64)]
        self.assertLess(conds[0], conds[1])
        self.assertLess(conds[1], conds[2])
        self.assertLess(np.linalg.cond(make_problem('shaw', 16).A), np.linalg.cond(make_problem('shaw', 32).A))

    def test_singular_values_sorted(self):
        for name in problem_names():
            s = np.linalg.svd(make_problem(name, 32).A, compute_uv=False)
            self.assertTrue(np.all(np.diff(s) <= 0), name)

    def test_deterministic(self):
        for name in problem_names():
            first, second = make_problem(name, 24), make_problem(name, 24)
            assert_array_equal(first.A, second.A)
            assert_array_equal(first.x_exact, second.x_exact)

    def test_unknown_name(self):
        with self.assertRaises(UnknownProblemError):
            make_problem('baart', 32)

    def test_size_too_small(self):
        with self.assertRaises(UnknownProblemError):
            make_problem('deriv2', 3)

    def test_odd_size_rejected_for_symmetric_quadrature(self):
        with self.assertRaises(UnknownProblemError):
            make_problem('shaw', 33)
        with self.assertRaises(UnknownProblemError):
            make_problem('phillips', 9)


class SmoothVariantTests(SimpleTestCase):

    def test_identity_unchanged(self):
        p = _toy_problem(np.eye(3), [1.0, -2.0, 0.5])
        s = smooth_variant(p)
        assert_array_equal(s.x_exact, p.x_exact)
        assert_array_equal(s.y_exact, p.y_exact)

    def test_diagonal(self):
        s = smooth_variant(_toy_problem(np.diag([1.0, 0.5]), [1.0, 1.0]))
        assert_allclose(s.x_exact, [1.0, 0.25])
        assert_allclose(s.y_exact, [1.0, 0.125])

    def test_deriv2_norm_bound(self):
        p = make_problem('deriv2', 64)
        s = smooth_variant(p)
        self.assertLess(np.linalg.norm(s.x_exact), np.linalg.norm(p.x_exact) * np.linalg.norm(p.A, 2) ** 2)
        self.assertEqual(s.name, 'deriv2-smooth')


class AddNoiseTests(SimpleTestCase):

    def setUp(self):
        self.problem = make_problem('phillips', 64)

    def test_zero_noise(self):
        sample = add_noise(self.problem, 0.0, seed=7)
        assert_array_equal(sample.y_delta, self.problem.y_exact)
        self.assertEqual(sample.delta_abs, 0.0)

    def test_deterministic(self):
        assert_array_equal(add_noise(self.problem, 0.01, 3).y_delta, add_noise(self.problem, 0.01, 3).y_delta)

    def test_exact_relative_level(self):
        sample = add_noise(self.problem, 0.01, seed=1)
        y = self.problem.y_exact
        rel = np.linalg.norm(sample.y_delta - y) / np.linalg.norm(y)
        self.assertAlmostEqual(rel, 0.01, delta=1e-12)
        self.assertAlmostEqual(sample.delta_abs, 0.01 * np.linalg.norm(y), delta=1e-12 * np.linalg.norm(y))
        self.assertEqual(sample.seed, 1)

    def test_independent_seeds_uncorrelated(self):
        p = make_problem('gravity', 256)
        w1 = add_noise(p, 0.01, 1).y_delta - p.y_exact
        w2 = add_noise(p, 0.01, 2).y_delta - p.y_exact
        self.assertLess(abs(np.corrcoef(w1, w2)[0, 1]), 0.2)

    def test_negative_level_rejected(self):
        with self.assertRaises(ValueError):
            add_noise(self.problem, -0.1, 0)
