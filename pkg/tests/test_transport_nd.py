import math
import unittest

import numpy as np

from brenierlab.common.exceptions import DomainError, NonConvergenceError, ParameterRangeError
from brenierlab.measures import ConvexBody, Gaussian, make_potential
from brenierlab.result import Err, Ok
from brenierlab.search import PairSpec
from brenierlab.transport_nd import (
    NonConvergence,
    default_epsilon,
    directional_derivatives,
    empirical_hessian_norm_nd,
    empirical_holder_nd,
    empirical_lipschitz_nd,
    map_eval,
    monotonicity_gap,
    plan_rows,
    potential_hessian,
    potential_second_quotient,
    potential_value,
    solve_entropic,
    supporting_slab,
)


SQUARE = ConvexBody.box(-1.0, 1.0, 2)
SOURCE = make_potential(Gaussian(2))


class TestSolve(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        result = solve_entropic(SOURCE, SQUARE, n=256, m=256, epsilon=0.1, tol=1e-3, seed=7)
        cls.result = result
        cls.tp = result.unfold(ok=lambda tp: tp, err=lambda failure: failure.transport)

    def test_converges(self):
        self.assertIsInstance(self.result, Ok)
        self.assertLess(self.tp.marginal_error, 1e-3)
        self.assertLess(self.tp.dual_change, 1e-8)
        self.assertEqual(self.tp.dimension, 2)
        self.assertIn("EntropicTransport(d=2", repr(self.tp))

    def test_map_stays_in_body(self):
        x = np.random.default_rng(0).normal(size=(200, 2)) * 2.0
        mapped = map_eval(self.tp, x)
        self.assertEqual(mapped.shape, (200, 2))
        self.assertTrue(np.all(np.abs(mapped) <= 1.0 + 1e-12))
        self.assertEqual(map_eval(self.tp, [0.1, -0.2]).shape, (2,))

    def test_hessian(self):
        rows = self.tp.source_samples[:32]
        hessian = potential_hessian(self.tp, rows)
        self.assertEqual(hessian.shape, (32, 2, 2))
        np.testing.assert_allclose(hessian, np.transpose(hessian, (0, 2, 1)), atol=1e-12)
        self.assertTrue(np.all(np.linalg.eigvalsh(hessian) >= -1e-10))
        h = np.array([1.0, 1.0]) / math.sqrt(2.0)
        first, second = directional_derivatives(self.tp, rows, h)
        np.testing.assert_allclose(second, np.einsum("a,kab,b->k", h, hessian, h), rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(first, map_eval(self.tp, rows) @ h, rtol=1e-10, atol=1e-12)
        found = empirical_hessian_norm_nd(self.tp)
        self.assertGreater(found.value, 0.0)
        self.assertEqual(len(found.point), 2)

    def test_gradient_matches_value(self):
        x = np.array([0.3, -0.4])
        step = 1e-5
        numeric = [(potential_value(self.tp, x + step * e) - potential_value(self.tp, x - step * e)) / (2 * step)
                   for e in np.eye(2)]
        np.testing.assert_allclose(numeric, map_eval(self.tp, x), atol=1e-6)

    def test_second_quotient(self):
        value = potential_second_quotient(self.tp, [0.0, 0.0], (1.0, 0.0), 1.0)
        self.assertGreaterEqual(value, 0.0)
        with self.assertRaises(DomainError):
            potential_second_quotient(self.tp, [0.0, 0.0], (1.0, 0.0), 0.1)
        with self.assertRaises(DomainError):
            potential_second_quotient(self.tp, [0.0, 0.0], (1.0, 1.0), 1.0)

    def test_monotone(self):
        self.assertGreaterEqual(monotonicity_gap(self.tp, 2000, seed=1), -1e-12)

    def test_holder(self):
        found = empirical_holder_nd(self.tp, 1.0, PairSpec(count=256, refine_rounds=1, t_max=2.0), seed=2)
        self.assertTrue(math.isfinite(found.value))
        self.assertGreater(found.value, 0.0)
        self.assertEqual(len(found.point), 4)
        lipschitz = empirical_lipschitz_nd(self.tp, PairSpec(count=256, refine_rounds=1, t_max=2.0), seed=2)
        self.assertEqual(lipschitz.value, found.value)
        with self.assertRaises(DomainError):
            empirical_holder_nd(self.tp, 0.0)
        with self.assertRaises(ParameterRangeError):
            empirical_holder_nd(self.tp, 1.0, PairSpec(t_max=0.5))

    def test_plan_rows(self):
        rows = plan_rows(self.tp)
        self.assertEqual(rows.shape, (256, 5))

    def test_reproducible(self):
        again = solve_entropic(SOURCE, SQUARE, n=256, m=256, epsilon=0.1, tol=1e-3, seed=7)
        tp = again.unfold(ok=lambda t: t, err=lambda failure: failure.transport)
        np.testing.assert_array_equal(tp.dual_f, self.tp.dual_f)
        np.testing.assert_array_equal(tp.target_samples, self.tp.target_samples)


class TestSolveFailures(unittest.TestCase):
    def test_non_convergence(self):
        result = solve_entropic(SOURCE, SQUARE, n=64, m=64, tol=1e-14, max_iter=1)
        self.assertIsInstance(result, Err)
        failure = result.unfold(ok=lambda _: None, err=lambda f: f)
        self.assertIsInstance(failure, NonConvergence)
        self.assertEqual(failure.transport.iterations_run, 1)
        self.assertIsInstance(failure.error, NonConvergenceError)
        self.assertEqual(failure.error.iterations, 1)

    def test_marginal_tolerance_alone_is_not_enough(self):
        loose = solve_entropic(SOURCE, SQUARE, n=128, m=128, epsilon=0.1, tol=1e-3, seed=3, dual_tol=1.0)
        self.assertIsInstance(loose, Ok)
        first_hit = loose.value
        self.assertGreater(first_hit.dual_change, 1e-8)
        strict = solve_entropic(SOURCE, SQUARE, n=128, m=128, epsilon=0.1, tol=1e-3, seed=3,
                                max_iter=first_hit.iterations_run)
        self.assertIsInstance(strict, Err)
        self.assertLess(strict.error.transport.marginal_error, 1e-3)

    def test_invalid_arguments(self):
        with self.assertRaises(DomainError):
            solve_entropic(make_potential(Gaussian(1)), ConvexBody.box(-1.0, 1.0, 1), n=16, m=16)
        with self.assertRaises(DomainError):
            solve_entropic(SOURCE, ConvexBody.box(-1.0, 1.0, 3), n=16, m=16)
        with self.assertRaises(ParameterRangeError):
            solve_entropic(SOURCE, SQUARE, n=0, m=16)
        with self.assertRaises(ParameterRangeError):
            solve_entropic(SOURCE, SQUARE, n=16, m=16, epsilon=-1.0)
        with self.assertRaises(ParameterRangeError):
            solve_entropic(SOURCE, SQUARE, n=16, m=16, dual_tol=0.0)

    def test_default_epsilon(self):
        self.assertAlmostEqual(default_epsilon(2.0), 0.02)


class TestSupportingSlab(unittest.TestCase):
    def test_box(self):
        self.assertEqual(supporting_slab(SQUARE, (1.0, 0.0)), (0.0, 1.0))
        center, half = supporting_slab(SQUARE, np.array([1.0, 1.0]) / math.sqrt(2.0))
        self.assertAlmostEqual(center, 0.0)
        self.assertAlmostEqual(half, math.sqrt(2.0))

    def test_ball(self):
        center, half = supporting_slab(ConvexBody.ball(2.0, 2, center=(1.0, 0.0)), (1.0, 0.0))
        self.assertAlmostEqual(center, 1.0)
        self.assertAlmostEqual(half, 2.0)

    def test_not_unit(self):
        with self.assertRaises(DomainError):
            supporting_slab(SQUARE, (2.0, 0.0))


if __name__ == "__main__":
    unittest.main()
