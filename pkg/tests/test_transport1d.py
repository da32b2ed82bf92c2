import math
import unittest

import numpy as np
from scipy import special
from scipy.optimize import brentq

from brenierlab.common.exceptions import DomainError, ParameterRangeError
from brenierlab.measures import (
    ConvexBody,
    Gaussian,
    HuberProduct,
    PowerLaw,
    UniformBody,
    cdf_1d,
    make_potential,
    quantile_1d,
)
from brenierlab.search import PairSpec
from brenierlab.transport1d import (
    build_map_1d,
    compose_maps,
    empirical_holder_1d,
    map_derivative,
    map_eval,
    map_table,
    potential_second_difference,
    theorem1_constant,
)


GAUSSIAN = make_potential(Gaussian(1))
WIDE_GAUSSIAN = make_potential(Gaussian(1, variance=2.0))
UNIFORM = make_potential(UniformBody(ConvexBody.box(-1.0, 1.0, 1)))


class TestBuildMap(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.to_uniform = build_map_1d(GAUSSIAN, UNIFORM)
        cls.scaling = build_map_1d(GAUSSIAN, WIDE_GAUSSIAN)

    def test_gaussian_to_uniform(self):
        x = np.array([-2.0, -0.5, 0.0, 1.0, 3.0])
        np.testing.assert_allclose(map_eval(self.to_uniform, x), 2.0 * special.ndtr(x) - 1.0, atol=1e-8)
        self.assertAlmostEqual(map_derivative(self.to_uniform, 0.0), math.sqrt(2.0 / math.pi), places=10)
        self.assertAlmostEqual(self.to_uniform(0.0), 0.0, places=10)

    def test_gaussian_scaling(self):
        self.assertAlmostEqual(map_eval(self.scaling, 0.5), math.sqrt(2.0) * 0.5, places=8)
        self.assertAlmostEqual(map_derivative(self.scaling, -1.3), math.sqrt(2.0), places=8)
        self.assertAlmostEqual(potential_second_difference(self.scaling, 0.3, 0.5), math.sqrt(2.0) * 0.25, places=7)

    def test_second_difference_outside_band(self):
        lo, hi = self.scaling.band
        value = potential_second_difference(self.scaling, hi, 1.0)
        self.assertAlmostEqual(value, math.sqrt(2.0), places=6)

    def test_monotone_table(self):
        rows = map_table(build_map_1d(GAUSSIAN, make_potential(PowerLaw(1, 4.0))), 201)
        self.assertEqual(rows.shape, (201, 3))
        self.assertTrue(np.all(np.diff(rows[:, 1]) > 0))
        self.assertTrue(np.all(rows[:, 2] > 0))
        np.testing.assert_allclose(rows[:, 1], -rows[::-1, 1], atol=1e-6)

    def test_compose(self):
        widest = make_potential(Gaussian(1, variance=4.0))
        composed = compose_maps(self.scaling, build_map_1d(WIDE_GAUSSIAN, widest))
        self.assertIs(composed.target, widest)
        self.assertAlmostEqual(map_eval(composed, 0.7), 1.4, places=7)
        self.assertAlmostEqual(map_derivative(composed, 0.7), 2.0, places=7)
        with self.assertRaises(ParameterRangeError):
            compose_maps(self.scaling, self.to_uniform)

    def test_invalid_inputs(self):
        with self.assertRaises(ParameterRangeError):
            build_map_1d(GAUSSIAN, UNIFORM, resolution=8)
        with self.assertRaises(DomainError):
            build_map_1d(make_potential(Gaussian(2)), UNIFORM)


class TestSplineAccuracy(unittest.TestCase):
    """Targets without a closed-form map, where the spline carries the composition"""

    @classmethod
    def setUpClass(cls):
        cls.maps = [build_map_1d(GAUSSIAN, make_potential(family)) for family in (PowerLaw(1, 4.0), HuberProduct(1))]

    def test_pushforward(self):
        for tm in self.maps:
            thresholds = quantile_1d(tm.target, np.linspace(1e-3, 1.0 - 1e-3, 256))
            lo, hi = tm.band
            preimages = np.array([brentq(lambda x, c=c: map_eval(tm, x) - c, lo, hi, xtol=1e-14) for c in thresholds])
            np.testing.assert_allclose(cdf_1d(tm.source, preimages), cdf_1d(tm.target, thresholds), atol=1e-6)

    def test_derivative_matches_finite_differences(self):
        x = np.linspace(-3.0, 3.0, 61)
        step = 1e-5
        for tm in self.maps:
            slope = (map_eval(tm, x + step) - map_eval(tm, x - step)) / (2.0 * step)
            np.testing.assert_allclose(map_derivative(tm, x), slope, rtol=1e-6)


class TestHolder(unittest.TestCase):
    def test_theorem1_constant(self):
        constant, exponent = theorem1_constant(1.0, 1.0, 1.0, 1.0)
        self.assertAlmostEqual(constant, 1.0)
        self.assertAlmostEqual(exponent, 1.0)
        constant, exponent = theorem1_constant(0.0, 3.0, 2.0, 2.0)
        self.assertAlmostEqual(constant, math.sqrt(2.0))
        self.assertAlmostEqual(exponent, 0.25)
        with self.assertRaises(ParameterRangeError):
            theorem1_constant(1.5, 3.0, 1.0, 1.0)
        with self.assertRaises(ParameterRangeError):
            theorem1_constant(1.0, 3.0, 0.0, 1.0)

    def test_linear_map(self):
        tm = build_map_1d(GAUSSIAN, WIDE_GAUSSIAN)
        found = empirical_holder_1d(tm, 1.0, PairSpec(count=512, refine_rounds=1), seed=3)
        self.assertAlmostEqual(found.value, math.sqrt(2.0), places=6)
        x, y = found.point
        self.assertLess(x, y)

    def test_reproducible(self):
        tm = build_map_1d(GAUSSIAN, UNIFORM)
        pairs = PairSpec(count=256, refine_rounds=1)
        first = empirical_holder_1d(tm, 0.5, pairs, seed=11)
        second = empirical_holder_1d(tm, 0.5, pairs, seed=11)
        self.assertEqual(first, second)

    def test_invalid_arguments(self):
        tm = build_map_1d(GAUSSIAN, UNIFORM)
        with self.assertRaises(DomainError):
            empirical_holder_1d(tm, 0.0)
        with self.assertRaises(DomainError):
            empirical_holder_1d(tm, 1.5)
        with self.assertRaises(ParameterRangeError):
            empirical_holder_1d(tm, 1.0, PairSpec(t_min=1.0, t_max=0.5))


if __name__ == "__main__":
    unittest.main()
