import math
import unittest

import numpy as np

from brenierlab.common.exceptions import EmptySearchError
from brenierlab.search import (
    Norm,
    PairSpec,
    SearchSpec,
    derived_rng,
    dual_norm_of,
    grid_infimum,
    halton_points,
    norm_of,
    sampled_supremum,
    unit_directions,
)


class TestNorms(unittest.TestCase):
    def test_norm_values(self):
        v = np.array([[3.0, -4.0]])
        self.assertAlmostEqual(float(norm_of(v, Norm.L2)[0]), 5.0)
        self.assertAlmostEqual(float(norm_of(v, Norm.L1)[0]), 7.0)
        self.assertAlmostEqual(float(norm_of(v, Norm.LINF)[0]), 4.0)
        self.assertAlmostEqual(float(norm_of(v, "Linf")[0]), 4.0)

    def test_dual_norms(self):
        v = np.array([[3.0, -4.0]])
        self.assertAlmostEqual(float(dual_norm_of(v, Norm.L1)[0]), 4.0)
        self.assertAlmostEqual(float(dual_norm_of(v, Norm.LINF)[0]), 7.0)
        self.assertAlmostEqual(float(dual_norm_of(v, Norm.L2)[0]), 5.0)

    def test_unit_directions(self):
        for norm in Norm:
            for d in (1, 2, 3):
                directions = unit_directions(d, norm, 16)
                self.assertEqual(directions.shape[1], d)
                np.testing.assert_allclose(norm_of(directions, norm), 1.0, rtol=1e-12)
        self.assertEqual(len(unit_directions(2, Norm.L2, 16)), 16)
        self.assertEqual(len(unit_directions(3, Norm.L2)), 26)


class TestStreams(unittest.TestCase):
    def test_derived_rng_is_reproducible(self):
        a = derived_rng(42, "holder_1d").random(5)
        b = derived_rng(42, "holder_1d").random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = derived_rng(42, "holder_1d").random(5)
        b = derived_rng(42, "holder_nd").random(5)
        c = derived_rng(43, "holder_1d").random(5)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))

    def test_halton_points(self):
        points = halton_points(3, 128, derived_rng(0, "design"))
        self.assertEqual(points.shape, (128, 3))
        self.assertTrue(np.all((points >= 0.0) & (points < 1.0)))


class TestSearch(unittest.TestCase):
    def test_grid_infimum_of_quadratic_second_difference(self):
        # (x+y)^2 + (x-y)^2 - 2x^2 = 2|y|^2 everywhere
        def objective(x, y):
            return np.sum((x + y) ** 2 + (x - y) ** 2 - 2.0 * x ** 2, axis=-1)

        found = grid_infimum(objective, 2, 0.5, Norm.L2, SearchSpec(box=2.0, per_axis=9, direction_count=16))
        self.assertAlmostEqual(found.value, 0.5, places=10)

    def test_grid_infimum_locates_minimum(self):
        def objective(x, y):
            return (x[:, 0] - 0.3) ** 2 + 0.0 * y[:, 0]

        found = grid_infimum(objective, 1, 1.0, Norm.L2, SearchSpec(box=2.0, per_axis=17))
        self.assertLess(found.value, 1e-10)
        self.assertAlmostEqual(found.point[0], 0.3, places=4)

    def test_sampled_supremum(self):
        def objective(unit):
            return -np.sum((unit - 0.7) ** 2, axis=1)

        found = sampled_supremum(objective, 2, PairSpec(count=512), derived_rng(1, "sup"))
        self.assertGreater(found.value, -1e-4)
        self.assertTrue(all(abs(c - 0.7) < 0.01 for c in found.point))

    def test_sampled_supremum_skips_nan(self):
        def objective(unit):
            values = unit[:, 0].copy()
            values[unit[:, 0] > 0.5] = np.nan
            return values

        found = sampled_supremum(objective, 1, PairSpec(count=256), derived_rng(1, "sup"))
        self.assertLessEqual(found.value, 0.5)
        self.assertGreater(found.value, 0.45)

    def test_larger_design_never_lowers_supremum(self):
        def rugged(unit):
            return np.sin(40.0 * unit[:, 0]) * np.cos(37.0 * unit[:, 1]) + 0.1 * unit[:, 0]

        def design(n):
            return PairSpec(count=n, refine_rounds=2, refine_count=32)

        values = [sampled_supremum(rugged, 2, design(n), derived_rng(5, "sup")).value for n in (16, 32, 64, 128, 256)]
        for smaller, larger in zip(values, values[1:]):
            self.assertGreaterEqual(larger, smaller)

    def test_nothing_admissible(self):
        with self.assertRaises(EmptySearchError):
            sampled_supremum(lambda u: np.full(len(u), math.nan), 1, PairSpec(count=16), derived_rng(0, "sup"))


if __name__ == "__main__":
    unittest.main()
