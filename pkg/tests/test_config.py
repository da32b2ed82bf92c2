import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from brenierlab.common.exceptions import ConfigError
from brenierlab.config import (
    OUTPUT_ENV,
    ExperimentConfig,
    OutputSection,
    apply_overrides,
    config_digest,
    from_dict,
    load_config,
    parse_body,
    parse_measure,
)
from brenierlab.measures import Ball, Box, ConvexPolynomial, Gaussian, HuberProduct, PowerLaw, UniformBody


class TestLoad(unittest.TestCase):
    def test_defaults(self):
        cfg = load_config()
        self.assertEqual(cfg.command, "suite")
        self.assertEqual(cfg.seed, 0)
        self.assertEqual(cfg.jobs, 1)
        self.assertEqual(cfg.check.p, 0.25)
        self.assertEqual(cfg.measure.dimension, 2)

    def test_overrides(self):
        cfg = load_config(overrides=["--check.p=0.5", "solver.n=100", "check.a=2", "check.radii=[1, 2]",
                                     "measure.source=poly:1:0.5"])
        self.assertEqual(cfg.check.p, 0.5)
        self.assertEqual(cfg.solver.n, 100)
        self.assertIsInstance(cfg.check.a, float)
        self.assertEqual(cfg.check.radii, (1.0, 2.0))
        self.assertEqual(cfg.measure.source, "poly:1:0.5")

    def test_flags_win(self):
        cfg = load_config(overrides=["check.p=0.5"], **{"check.p": 1.0, "seed": 9, "jobs": None})
        self.assertEqual(cfg.check.p, 1.0)
        self.assertEqual(cfg.seed, 9)
        self.assertEqual(cfg.jobs, 1)

    def test_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "experiment.toml"
            path.write_text("seed = 3\ncommand = \"envelope\"\n[check]\np = -0.5\n", encoding="utf-8")
            cfg = load_config(path, ["check.a=3"])
            self.assertEqual((cfg.seed, cfg.command, cfg.check.p, cfg.check.a), (3, "envelope", -0.5, 3.0))
            path.write_text("[check\n", encoding="utf-8")
            with self.assertRaises(ConfigError):
                load_config(path)
            with self.assertRaises(ConfigError):
                load_config(Path(tmp) / "missing.toml")

    def test_unknown_fields(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(overrides=["check.bogus=1"])
        self.assertEqual(ctx.exception.field, "check.bogus")
        with self.assertRaises(ConfigError) as ctx:
            load_config(overrides=["nope.key=1"])
        self.assertEqual(ctx.exception.field, "nope")
        with self.assertRaises(ConfigError):
            apply_overrides(dict(), ["check.p"])

    def test_wrong_types(self):
        with self.assertRaises(ConfigError) as ctx:
            load_config(overrides=["solver.n=1.5"])
        self.assertEqual(ctx.exception.field, "solver.n")
        with self.assertRaises(ConfigError):
            load_config(overrides=["output.plots=1"])
        with self.assertRaises(ConfigError):
            load_config(overrides=["check.radii=[\"a\"]"])

    def test_all_errors_gathered(self):
        errors = from_dict({"check": {"bogus": 1, "p": "x"}, "seed": "zero"}).unfold(ok=lambda _: [], err=lambda e: e)
        self.assertEqual(sorted(e.field for e in errors), ["check.bogus", "check.p", "seed"])

    def test_validation(self):
        for override, field in (("jobs=0", "jobs"), ("measure.dimension=4", "measure.dimension"),
                                ("check.slack=0.5", "check.slack"), ("check.holder_p=2", "check.holder_p"),
                                ("check.alpha=0", "check.alpha"), ("command=\"draw\"", "command"),
                                ("solver.dual_tol=0.0", "solver.tol"), ("logging.level=\"LOUD\"", "logging.level")):
            with self.assertRaises(ConfigError) as ctx:
                load_config(overrides=[override])
            self.assertEqual(ctx.exception.field, field)

    def test_dict_form(self):
        cfg = load_config(overrides=["check.radii=[0.5, 3]", "seed=5"])
        self.assertEqual(from_dict(cfg.to_dict()).unfold(ok=lambda c: c, err=lambda e: e), cfg)

    def test_output_environment(self):
        with mock.patch.dict(os.environ, {OUTPUT_ENV: "/tmp/elsewhere"}):
            self.assertEqual(OutputSection().directory, "/tmp/elsewhere")


class TestDigest(unittest.TestCase):
    def test_stable(self):
        digest = config_digest(ExperimentConfig())
        self.assertEqual(len(digest), 64)
        self.assertEqual(digest, config_digest(load_config(overrides=["command=\"suite\""])))

    def test_sensitive_to_results(self):
        base = config_digest(load_config())
        self.assertNotEqual(base, config_digest(load_config(overrides=["seed=1"])))
        self.assertNotEqual(base, config_digest(load_config(overrides=["check.p=0.5"])))

    def test_ignores_execution_fields(self):
        base = config_digest(load_config())
        changed = load_config(overrides=["jobs=4", "output.directory=\"elsewhere\"", "output.plots=true",
                                         "logging.level=\"DEBUG\""])
        self.assertEqual(base, config_digest(changed))


class TestDescriptions(unittest.TestCase):
    def test_measures(self):
        self.assertEqual(parse_measure("gaussian").family, Gaussian(1))
        self.assertEqual(parse_measure("Gaussian:2", 2).family, Gaussian(2, variance=2.0))
        uniform = parse_measure("uniform:-1:1").family
        self.assertIsInstance(uniform, UniformBody)
        self.assertEqual(uniform.body.shape, Box((-1.0,), (1.0,)))
        self.assertEqual(parse_measure("powerlaw:4").family, PowerLaw(1, 4.0))
        self.assertEqual(parse_measure("huber", 2).family, HuberProduct(2))
        self.assertEqual(parse_measure("poly:1:0.5").family, ConvexPolynomial(1, ((1.0,),), 0.5))
        self.assertIsInstance(parse_measure("ball:1", 2).family, UniformBody)

    def test_bad_measures(self):
        for text, dimension in (("weird", 1), ("gaussian:x", 1), ("gaussian:1:2", 1), ("uniform:1:-1", 1),
                                ("poly:1:0.5", 2), ("huber:1", 1)):
            with self.assertRaises(ConfigError):
                parse_measure(text, dimension)
        with self.assertRaises(ConfigError) as ctx:
            parse_measure("weird", 1, "measure.target")
        self.assertEqual(ctx.exception.field, "measure.target")

    def test_bodies(self):
        self.assertEqual(parse_body("box:-1:1", 2).shape, Box((-1.0, -1.0), (1.0, 1.0)))
        self.assertEqual(parse_body("ball:2", 3).shape, Ball((0.0, 0.0, 0.0), 2.0))
        self.assertEqual(parse_body("ball:1:0.5:0", 2).shape, Ball((0.5, 0.0), 1.0))
        for text in ("cone:1", "box:1:-1", "ball:-1", "ball:1:0"):
            with self.assertRaises(ConfigError):
                parse_body(text, 2)


if __name__ == "__main__":
    unittest.main()
