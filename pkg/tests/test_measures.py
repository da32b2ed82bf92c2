import math
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from brenierlab.common.exceptions import (
    DimensionMismatchError,
    DomainError,
    NotMonotoneError,
    ParameterRangeError,
)
from brenierlab.measures import (
    ConvexBody,
    ConvexPolynomial,
    ConvexityModulus,
    Gaussian,
    HuberProduct,
    ModulusKind,
    Polytope,
    PowerLaw,
    UniformBody,
    bregman_divergence,
    cdf_1d,
    conjugate_modulus,
    convexify_modulus,
    convexity_gradient_constant,
    curvature_bounds,
    density,
    eval_potential,
    grad_potential,
    holder_gradient_constant,
    make_potential,
    modulus_bregman,
    modulus_delta,
    modulus_from_values,
    modulus_grid,
    quantile_1d,
    sample,
    sample_body,
    second_difference_constant,
    second_quotient,
    support_1d,
    tabulate_modulus,
)
from brenierlab.search import Norm, SearchSpec


SEARCH_1D = SearchSpec(box=6.0)
coordinate = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


class TestConvexBody(unittest.TestCase):
    def test_box(self):
        body = ConvexBody.box(-1.0, 1.0, 2)
        self.assertAlmostEqual(body.volume(), 4.0)
        self.assertAlmostEqual(body.diameter(), 2.0 * math.sqrt(2.0))
        self.assertEqual(body.support((1.0, 0.0)), (-1.0, 1.0))
        lo, hi = body.support(np.array([1.0, 1.0]) / math.sqrt(2.0))
        self.assertAlmostEqual(hi, math.sqrt(2.0))
        self.assertAlmostEqual(lo, -math.sqrt(2.0))
        np.testing.assert_array_equal(body.contains([[0.0, 0.0], [1.5, 0.0]]), [True, False])

    def test_ball(self):
        body = ConvexBody.ball(1.0, 3)
        self.assertAlmostEqual(body.volume(), 4.0 * math.pi / 3.0)
        self.assertAlmostEqual(body.diameter(), 2.0)
        lo, hi = body.bounding_box()
        np.testing.assert_allclose(lo, -1.0)
        np.testing.assert_allclose(hi, 1.0)

    def test_polytope_triangle(self):
        body = ConvexBody(Polytope(((-1.0, 0.0), (0.0, -1.0), (1.0, 1.0)), (0.0, 0.0, 1.0)), 2)
        self.assertAlmostEqual(body.volume(), 0.5, places=10)
        self.assertAlmostEqual(body.diameter(), math.sqrt(2.0), places=10)
        self.assertAlmostEqual(body.support((1.0, 0.0))[1], 1.0, places=9)

    def test_invalid_bodies(self):
        with self.assertRaises(ParameterRangeError):
            ConvexBody.box(1.0, -1.0, 2)
        with self.assertRaises(ParameterRangeError):
            ConvexBody.ball(-1.0, 2)
        with self.assertRaises(ParameterRangeError):
            ConvexBody(Polytope(((1.0, 0.0),), (1.0,)), 2)

    def test_sample_body(self):
        body = ConvexBody.ball(1.0, 2)
        points, acceptance = sample_body(body, 5000, 7)
        self.assertEqual(points.shape, (5000, 2))
        self.assertTrue(np.all(body.contains(points)))
        self.assertAlmostEqual(acceptance, math.pi / 4.0, delta=0.03)


class TestPotential(unittest.TestCase):
    def test_normalizers(self):
        self.assertAlmostEqual(make_potential(Gaussian(2)).log_normalizer, math.log(2.0 * math.pi), places=9)
        self.assertAlmostEqual(make_potential(PowerLaw(1, 4.0)).log_normalizer,
                               math.log(2.0 * math.gamma(1.25)), places=9)
        self.assertAlmostEqual(make_potential(UniformBody(ConvexBody.box(-1.0, 1.0, 2))).log_normalizer,
                               math.log(4.0))

    def test_invalid_families(self):
        with self.assertRaises(ParameterRangeError):
            make_potential(PowerLaw(1, 0.5))
        with self.assertRaises(ParameterRangeError):
            make_potential(Gaussian(1, variance=0.0))
        with self.assertRaises(ParameterRangeError):
            make_potential(ConvexPolynomial(1, ((-1.0,),), 0.0))

    def test_evaluation(self):
        pot = make_potential(Gaussian(2))
        self.assertIsInstance(eval_potential(pot, [0.0, 0.0]), float)
        self.assertAlmostEqual(float(density(pot, [0.0, 0.0])), 1.0 / (2.0 * math.pi))
        np.testing.assert_allclose(grad_potential(pot, [1.0, -2.0]), [1.0, -2.0])
        self.assertEqual(eval_potential(pot, [[0.0, 0.0], [1.0, 1.0]]).shape, (2,))
        with self.assertRaises(DimensionMismatchError):
            eval_potential(pot, [1.0, 2.0, 3.0])

    @settings(max_examples=50, deadline=None)
    @given(coordinate, coordinate, coordinate, coordinate)
    def test_gaussian_second_difference(self, x0, x1, y0, y1):
        pot = make_potential(Gaussian(2))
        self.assertAlmostEqual(second_quotient(pot, [x0, x1], [y0, y1]), y0 ** 2 + y1 ** 2, places=9)
        self.assertAlmostEqual(bregman_divergence(pot, [x0, x1], [y0, y1]), 0.5 * (y0 ** 2 + y1 ** 2), places=9)

    @settings(max_examples=50, deadline=None)
    @given(coordinate, coordinate)
    def test_second_quotient_symmetry(self, x, y):
        pot = make_potential(PowerLaw(1, 4.0))
        self.assertAlmostEqual(second_quotient(pot, [x], [y]), second_quotient(pot, [x], [-y]), places=8)
        self.assertGreaterEqual(second_quotient(pot, [x], [y]), -1e-10)

    def test_cdf_and_quantile(self):
        u = np.array([1e-4, 0.1, 0.5, 0.9, 1.0 - 1e-4])
        for pot in (make_potential(Gaussian(1, variance=2.0)), make_potential(PowerLaw(1, 4.0)),
                    make_potential(HuberProduct(1)), make_potential(ConvexPolynomial(1, ((1.0,),), 0.5))):
            np.testing.assert_allclose(cdf_1d(pot, quantile_1d(pot, u)), u, atol=1e-9)
            self.assertAlmostEqual(float(cdf_1d(pot, 0.0)), 0.5, places=7)

    def test_huber_cdf_is_continuous(self):
        pot = make_potential(HuberProduct(1))
        for knee in (-1.0, 1.0):
            below, above = cdf_1d(pot, np.array([knee - 1e-9, knee + 1e-9]))
            self.assertAlmostEqual(float(below), float(above), places=7)

    def test_uniform_distribution_functions(self):
        pot = make_potential(UniformBody(ConvexBody.box(-1.0, 3.0, 1)))
        self.assertEqual(support_1d(pot), (-1.0, 3.0))
        self.assertAlmostEqual(float(cdf_1d(pot, 0.0)), 0.25)
        self.assertAlmostEqual(float(quantile_1d(pot, 0.75)), 2.0)
        with self.assertRaises(DomainError):
            quantile_1d(pot, 1.0)
        with self.assertRaises(DomainError):
            cdf_1d(make_potential(Gaussian(2)), 0.0)

    def test_sampling(self):
        pot = make_potential(Gaussian(2, mean=(1.0, -1.0), variance=4.0))
        x = sample(pot, 20_000, 3)
        np.testing.assert_allclose(x.mean(axis=0), [1.0, -1.0], atol=0.06)
        np.testing.assert_allclose(x.var(axis=0), [4.0, 4.0], rtol=0.05)
        np.testing.assert_array_equal(x, sample(pot, 20_000, 3))
        quartic = sample(make_potential(PowerLaw(2, 4.0)), 1000, 3, method="qmc")
        self.assertEqual(quartic.shape, (1000, 2))
        with self.assertRaises(ParameterRangeError):
            sample(pot, 0, 3)

    def test_curvature_bounds(self):
        h = np.array([0.6, 0.8])
        self.assertEqual(curvature_bounds(make_potential(Gaussian(2, variance=2.0)), h), (0.5, math.inf))
        lam, m = curvature_bounds(make_potential(HuberProduct(2)), h)
        self.assertAlmostEqual(lam, 1.0)
        self.assertAlmostEqual(m, 1.4)


class TestModuli(unittest.TestCase):
    def test_gaussian_moduli(self):
        pot = make_potential(Gaussian(1))
        self.assertAlmostEqual(modulus_delta(pot, 0.5, search=SEARCH_1D), 0.25, places=9)
        self.assertAlmostEqual(modulus_bregman(pot, 0.5, search=SEARCH_1D), 0.125, places=9)
        self.assertEqual(modulus_delta(pot, 0.0), 0.0)
        with self.assertRaises(DomainError):
            modulus_delta(pot, -1.0)
        with self.assertRaises(DomainError):
            modulus_delta(make_potential(UniformBody(ConvexBody.box(-1.0, 1.0, 1))), 0.5)

    def test_quartic_moduli(self):
        pot = make_potential(PowerLaw(1, 4.0))
        self.assertAlmostEqual(modulus_delta(pot, 1.0, search=SEARCH_1D), 2.0, places=6)
        self.assertAlmostEqual(modulus_bregman(pot, 1.0, search=SEARCH_1D), 1.0 / 3.0, places=6)

    def test_tabulated_power_law(self):
        pot = make_potential(Gaussian(1))
        m = tabulate_modulus(pot, ModulusKind.DELTA, Norm.L2, modulus_grid(4.0, 16), SEARCH_1D)
        self.assertEqual(m.grid[0], 0.0)
        self.assertAlmostEqual(float(m.at(0.37)), 0.37 ** 2, places=8)
        t, beyond = m.inverse(0.25)
        self.assertAlmostEqual(float(t[0]), 0.5, places=8)
        self.assertFalse(beyond)
        with self.assertRaises(DomainError):
            m.at(5.0)
        self.assertAlmostEqual(float(m.at(8.0, extrapolate=True)), 64.0, places=5)
        t, beyond = m.inverse(64.0)
        self.assertTrue(beyond)
        self.assertAlmostEqual(float(t[0]), 8.0, places=5)
        self.assertEqual(m.rows()[1][2:], ("delta", "L2"))

    def test_modulus_from_values(self):
        m = modulus_from_values(ModulusKind.BREGMAN, [0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 0.5, 2.0])
        np.testing.assert_allclose(m.values, [0.0, 0.5, 0.5, 2.0])

    def test_invalid_modulus(self):
        with self.assertRaises(ParameterRangeError):
            ConvexityModulus(ModulusKind.DELTA, np.array([0.0, 1.0]), np.array([1.0, 2.0]), Norm.L2)
        with self.assertRaises(ParameterRangeError):
            ConvexityModulus(ModulusKind.DELTA, np.array([0.5, 1.0]), np.array([0.0, 2.0]), Norm.L2)
        with self.assertRaises(NotMonotoneError):
            ConvexityModulus(ModulusKind.DELTA, np.array([0.0, 1.0, 2.0]), np.array([0.0, 2.0, 1.0]), Norm.L2)

    def test_convexify(self):
        grid = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        m = modulus_from_values(ModulusKind.BREGMAN, grid, [0.0, 1.0, 1.2, 1.3, 4.0])
        hull = convexify_modulus(m)
        self.assertEqual(hull.kind, ModulusKind.BREGMAN_CONVEXIFIED)
        self.assertTrue(np.all(hull.values <= m.values + 1e-15))
        slopes = np.diff(hull.values) / np.diff(grid)
        self.assertTrue(np.all(np.diff(slopes) >= -1e-12))
        np.testing.assert_allclose(hull.values, [0.0, 1.3 / 3.0, 2.6 / 3.0, 1.3, 4.0], atol=1e-12)

    def test_conjugate_of_half_square(self):
        grid = modulus_grid(8.0, 48)
        m = modulus_from_values(ModulusKind.BREGMAN, grid, 0.5 * grid ** 2)
        conj = conjugate_modulus(m)
        self.assertEqual(conj.kind, ModulusKind.BREGMAN_CONJUGATE)
        inner = grid <= 6.0
        np.testing.assert_allclose(conj.values[inner], 0.5 * grid[inner] ** 2, rtol=1e-6, atol=1e-9)


class TestGrowthConstants(unittest.TestCase):
    def test_gaussian_constants(self):
        pot = make_potential(Gaussian(1))
        self.assertAlmostEqual(second_difference_constant(pot, 1.0, upper=True, search=SEARCH_1D), 1.0, places=8)
        self.assertAlmostEqual(holder_gradient_constant(pot, 1.0, search=SEARCH_1D), 1.0, places=8)
        self.assertAlmostEqual(convexity_gradient_constant(pot, 1.0, search=SEARCH_1D), 1.0, places=8)

    def test_quartic_constants(self):
        pot = make_potential(PowerLaw(1, 4.0))
        self.assertAlmostEqual(second_difference_constant(pot, 3.0, upper=False, search=SEARCH_1D), 2.0, places=6)
        self.assertAlmostEqual(convexity_gradient_constant(pot, 3.0, search=SEARCH_1D), 1.0, places=5)


if __name__ == "__main__":
    unittest.main()
