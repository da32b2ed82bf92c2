import json
import math
import unittest

import numpy as np

from brenierlab.common.exceptions import NotConvexError, ParameterRangeError
from brenierlab.measures import (
    ConvexBody,
    Gaussian,
    ModulusKind,
    UniformBody,
    make_potential,
    modulus_from_values,
    modulus_grid,
)
from brenierlab.search import PairSpec, SearchSpec
from brenierlab.transport1d import build_map_1d
from brenierlab.verify import (
    DirectionalSample,
    Status,
    check_bound_ordering,
    check_caffarelli,
    check_envelope_oracle,
    check_g_pushforward,
    check_gradient_holder,
    check_moduli_lemma,
    check_sharper_quadratic,
    check_theorem1,
    check_theorem_hoelder,
    envelope_factor,
    hoelder_second_difference_bound,
    make_report,
    ms_modulus_bound_check,
    sample_map_1d,
    quotient_from_map_1d,
    second_order_envelope_check,
    sodin_amplified_constant,
    sodin_bound_check,
)


GAUSSIAN = make_potential(Gaussian(1))
FAST_PAIRS = PairSpec(count=256, refine_rounds=1)


def half_square(rows):
    return 0.5 * np.sum(rows ** 2, axis=1)


def identity(rows):
    return np.asarray(rows, dtype=float)


class TestReport(unittest.TestCase):
    def test_pass_and_fail(self):
        self.assertEqual(make_report("a", "x <= y", 1.0, 1.1, slack=1.2).status, Status.PASS)
        self.assertTrue(make_report("a", "x <= y", 1.0, 1.0005, tolerance=1e-3).passed)
        failed = make_report("a", "x <= y", 1.0, 1.5)
        self.assertEqual(failed.status, Status.FAIL)
        self.assertFalse(failed.passed)

    def test_explicit_status(self):
        self.assertTrue(make_report("a", "", 1.0, 2.0, status=Status.VACUOUS).passed)
        inconclusive = make_report("a", "", 1.0, 0.0, status=Status.INCONCLUSIVE)
        self.assertFalse(inconclusive.passed)
        self.assertEqual(inconclusive.status, Status.INCONCLUSIVE)

    def test_invalid(self):
        with self.assertRaises(ParameterRangeError):
            make_report("a", "", 1.0, 0.5, slack=0.9)
        with self.assertRaises(ParameterRangeError):
            make_report("a", "", 1.0, 0.5, tolerance=-1.0)

    def test_to_dict(self):
        report = make_report("a", "anchor", math.inf, 0.5, witness=np.array([[1.0, 2.0]]), notes=("n",))
        report = report.with_provenance("abc", 7)
        document = report.to_dict()
        self.assertEqual(document["theoretical"], "inf")
        self.assertEqual(document["witness"], [1.0, 2.0])
        self.assertEqual(document["config_digest"], "abc")
        self.assertEqual(document["seed"], 7)
        self.assertEqual(document["status"], "pass")
        json.dumps(document, allow_nan=False)


class TestSecondDifference(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.scaling = build_map_1d(GAUSSIAN, make_potential(Gaussian(1, variance=2.0)))

    def test_constants(self):
        self.assertEqual(hoelder_second_difference_bound(1.0, 1.0, 1.0, 1.0), (2.0, 2.0))
        constant, power = hoelder_second_difference_bound(1.0, 0.0, 1.0, 3.0)
        self.assertAlmostEqual(constant, 2.0)
        self.assertAlmostEqual(power, 1.25)
        self.assertEqual(sodin_amplified_constant(1.0, 1.0, 1.0, 1.0), (16.0, 1.0))
        with self.assertRaises(ParameterRangeError):
            hoelder_second_difference_bound(1.0, 2.0, 1.0, 3.0)

    def test_sharper_is_attained(self):
        report = check_sharper_quadratic(1.0, 0.5, quotient_from_map_1d(self.scaling), ((-3.0,), (3.0,)),
                                         FAST_PAIRS, seed=1)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.empirical, 1.0, places=4)
        self.assertEqual(len(report.witness), 3)

    def test_general_bound(self):
        report = check_theorem_hoelder(1.0, 1.0, 0.5, 1.0, quotient_from_map_1d(self.scaling), ((-3.0,), (3.0,)),
                                       FAST_PAIRS, seed=1)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.empirical, 0.5, places=4)

    def test_ordering(self):
        report = check_bound_ordering(2.0, 1.0)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.empirical, 0.5)

    def test_bad_domain(self):
        with self.assertRaises(ParameterRangeError):
            check_sharper_quadratic(1.0, 0.5, quotient_from_map_1d(self.scaling), ((1.0,), (-1.0,)))

    def test_theorem1(self):
        report = check_theorem1(self.scaling, 1.0, 1.0, 1.0, 0.5, FAST_PAIRS, seed=4)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.theoretical, math.sqrt(2.0))
        self.assertAlmostEqual(report.empirical, math.sqrt(2.0), places=5)


class TestGradientModuli(unittest.TestCase):
    def test_gradient_holder(self):
        square = ((-1.0, -1.0), (1.0, 1.0))
        report = check_gradient_holder(lambda rows: 2.0 * rows, 1.0, 2.0, square, FAST_PAIRS, seed=0)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.empirical, 2.0, places=9)
        self.assertEqual(len(report.witness), 4)
        with self.assertRaises(ParameterRangeError):
            check_gradient_holder(identity, 0.0, 1.0, square)

    def test_ms_modulus(self):
        grid = modulus_grid()
        delta = modulus_from_values(ModulusKind.DELTA, grid, grid ** 2)
        report = ms_modulus_bound_check(identity, delta, ((-1.0, -1.0), (1.0, 1.0)), FAST_PAIRS, seed=0)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.empirical, 1.0 / 16.0, places=6)
        bregman = modulus_from_values(ModulusKind.BREGMAN, grid, grid ** 2 / 2.0)
        with self.assertRaises(ParameterRangeError):
            ms_modulus_bound_check(identity, bregman, ((-1.0, -1.0), (1.0, 1.0)))

    def test_sodin(self):
        report = sodin_bound_check(half_square, identity, (0.2, -0.1), 0.5, (0.6, 0.8), seed=3)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.empirical, 0.5)
        self.assertAlmostEqual(report.theoretical, 4.0, places=9)
        with self.assertRaises(NotConvexError):
            sodin_bound_check(lambda rows: -half_square(rows), lambda rows: -rows, (0.0, 0.0), 0.5, (1.0, 0.0))

    def test_moduli_lemma(self):
        report = check_moduli_lemma(GAUSSIAN, [0.5, 1.0], search=SearchSpec(box=6.0))
        self.assertTrue(report.passed)
        self.assertLess(abs(report.empirical), 1e-6)


class TestEnvelopeChecks(unittest.TestCase):
    def test_factor(self):
        self.assertEqual(envelope_factor(4.0, None, 0.0), 2.0)
        self.assertAlmostEqual(envelope_factor(1.0, 2.0, 0.0), math.sqrt(2.0))

    def test_uniform_target_is_tight(self):
        uniform = make_potential(UniformBody(ConvexBody.box(-1.0, 1.0, 1)))
        directional = sample_map_1d(build_map_1d(GAUSSIAN, uniform), count=401)
        report = second_order_envelope_check(directional, (0.0, 1.0), 1.0, 1, slack=1.0, tolerance=1e-4)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.empirical, report.theoretical, places=4)

    def test_outside_slab_is_inconclusive(self):
        directional = DirectionalSample(np.ones(1), np.zeros((1, 1)), np.array([2.0]), np.array([0.1]))
        report = second_order_envelope_check(directional, (0.0, 1.0), 1.0, 1)
        self.assertEqual(report.status, Status.INCONCLUSIVE)
        self.assertFalse(report.passed)
        with self.assertRaises(ParameterRangeError):
            second_order_envelope_check(directional, (0.0, 1.0), 1.0, 2, m=1.0)

    def test_caffarelli(self):
        tm = build_map_1d(GAUSSIAN, make_potential(Gaussian(1, variance=0.25)))
        report = check_caffarelli(tm, 4.0)
        self.assertTrue(report.passed)
        self.assertAlmostEqual(report.empirical, 0.5, places=8)
        self.assertEqual(report.theoretical, 0.5)

    def test_oracle(self):
        report = check_envelope_oracle(0.25, 1.0)
        self.assertEqual(report.check_id, "envelope_oracle_p0.25")
        self.assertTrue(report.passed)

    def test_g_pushforward(self):
        report = check_g_pushforward(1.0, seed=5)
        self.assertTrue(report.passed)
        self.assertLess(report.empirical, 0.01)
        again = check_g_pushforward(1.0, seed=5)
        self.assertEqual(report, again)


if __name__ == "__main__":
    unittest.main()
