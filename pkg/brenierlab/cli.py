"""
    Command-line front end.

        brenierlab envelope     tabulate f_{p,a}, compare it with the shooting solution
        brenierlab transport1d  build a 1D map, check the regularity bounds on it
        brenierlab transportnd  entropic transport in 2D or 3D, check the measure-set bounds
        brenierlab concentrate  concentration profiles and the transport inequalities
        brenierlab suite        the whole battery
        brenierlab report       summary table of written report files

    Exit codes: 0 every check passed, 1 a check failed, 2 configuration error,
    3 numerical non-convergence or an inconclusive check.
"""
import argparse
import logging
import math
import sys
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import special

from brenierlab import transport1d as t1
from brenierlab import transport_nd as tn
from brenierlab import verify as vf
from brenierlab.artifacts import read_reports, summary_table, write_csv, write_reports, write_svg
from brenierlab.common.exceptions import ConfigError, NonConvergenceError
from brenierlab.concentration import (
    EnlargementQuery,
    HalfSpace,
    check_ms_concentration,
    concentration_profile,
    gaussian_tail_check,
    marton_check,
    marton_concentration_bound,
    mlsi_check,
    talagrand_check,
)
from brenierlab.config import ExperimentConfig, config_digest, load_config, parse_body, parse_measure
from brenierlab.envelope import f0_from_a, make_envelope, measure_set_bound, measure_set_product_bound
from brenierlab.measures import (
    ConvexPolynomial,
    Gaussian,
    HuberProduct,
    ModulusKind,
    Potential,
    PowerLaw,
    UniformBody,
    conjugate_modulus,
    convexify_modulus,
    convexity_gradient_constant,
    curvature_bounds,
    holder_gradient_constant,
    make_potential,
    modulus_grid,
    second_difference_constant,
    support_1d,
    tabulate_modulus,
)
from brenierlab.result import Result
from brenierlab.search import PairSpec, SearchSpec, derived_rng
from brenierlab.task import Task
from brenierlab.task_runners import run_all


__all__ = [
    "EXIT_OK",
    "EXIT_FAILED",
    "EXIT_CONFIG",
    "EXIT_NUMERICAL",
    "Table",
    "Outcome",
    "build_parser",
    "checks_for",
    "exit_code",
    "run_command",
    "main",
]


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

_SEARCH_1D = SearchSpec(box=6.0)
_SEARCH_2D = SearchSpec(box=4.0, per_axis=33)
_ENVELOPE_EXPONENTS = (-0.5, 0.0, 0.25, 1.0, 2.0)
_CAFFARELLI_K = (0.25, 1.0, 4.0)
_MARTON_RADII = (0.0, 0.5, 1.0, 2.0)


@dataclass(frozen=True, slots=True, repr=True, eq=False)
class Table:
    """A CSV artifact; plot names the columns drawn against the first one when plots are on"""
    name: str
    header: tuple[str, ...]
    rows: np.ndarray = field(repr=False)
    plot: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True, repr=True)
class Outcome:
    reports: tuple[vf.VerificationReport, ...]
    tables: tuple[Table, ...] = ()


CheckFn = Callable[[ExperimentConfig], Task[Outcome]]


def _step(fn: Callable[[ExperimentConfig], Outcome]) -> CheckFn:
    """A check that runs as one effect"""
    return lambda cfg: Task.effect(partial(fn, cfg))


def _pairs(cfg: ExperimentConfig) -> PairSpec:
    return PairSpec(count=cfg.check.pair_count)


def _rows_map(tm: t1.TransportMap1D) -> Callable[[np.ndarray], np.ndarray]:
    def mapping(x: np.ndarray) -> np.ndarray:
        return np.asarray(t1.map_eval(tm, np.asarray(x, dtype=float)[:, 0]), dtype=float)[:, None]

    return mapping


def _random_polynomial(rng: np.random.Generator, d: int) -> ConvexPolynomial:
    """x^T A x / 2 + c |x|^4 + <l, x> with A positive definite"""
    b = rng.normal(size=(d, d))
    a = b @ b.T / d + 0.1 * np.eye(d)
    return ConvexPolynomial(
        dimension=d,
        quadratic=tuple(tuple(float(v) for v in row) for row in a),
        quartic=float(rng.uniform(0.0, 0.5)),
        linear=tuple(float(v) for v in 0.5 * rng.normal(size=d)),
    )


# ---------------------------------------------------------------- envelope

def _envelope_configured(cfg: ExperimentConfig) -> Outcome:
    env = make_envelope(cfg.check.p, cfg.check.a)
    table = Table(f"envelope_p{cfg.check.p:g}_a{cfg.check.a:g}", ("t", "f", "minus_df"),
                  env.table(cfg.check.nodes), ("f",))
    report = vf.check_envelope_oracle(cfg.check.p, cfg.check.a, check_id="envelope_oracle")
    return Outcome((report,), (table,))


def _envelope_oracle(p: float, cfg: ExperimentConfig) -> Outcome:
    _ = cfg  # a dummy operation for an unused argument
    return Outcome((vf.check_envelope_oracle(p, 1.0),))


def _g_pushforward(cfg: ExperimentConfig) -> Outcome:
    return Outcome((vf.check_g_pushforward(cfg.check.a, 100_000, cfg.seed),))


# ---------------------------------------------------------------- one-dimensional transport

def _tightness_reports(tm: t1.TransportMap1D, source: Potential, target: Potential, label: str):
    """phi'' against f_{0,a}(phi' - t0) for a uniform target; equality of the maximum for a Gaussian source"""
    lo, hi = support_1d(target)
    t0, a = 0.5 * (lo + hi), 0.5 * (hi - lo)
    lam, _ = curvature_bounds(source, (1.0,))
    if not math.isfinite(lam):
        logger.info("%s: the source has unbounded curvature, no envelope check", label)
        return list()
    directional = vf.sample_map_1d(tm)
    reports = [vf.second_order_envelope_check(directional, (t0, a), lam, 1, slack=1.0, tolerance=1e-4,
                                              check_id=f"{label}_envelope")]
    if isinstance(source.family, Gaussian):
        k = int(np.argmax(directional.second))
        expected = math.sqrt(lam) * f0_from_a(a, 0.0)
        largest = float(directional.second[k])
        status = vf.Status.PASS if abs(largest - expected) <= 1e-4 else vf.Status.FAIL
        reports.append(vf.make_report(f"{label}_max_second_derivative", "max phi'' = sqrt(Lambda) a sqrt(2/pi)",
                                      expected, largest, 1.0, 1e-4, (directional.points[k, 0], directional.first[k]),
                                      notes=("equality within the tolerance", "witness: x, phi'(x)"),
                                      status=status))
    return reports


def _regularity_reports(tm: t1.TransportMap1D, source: Potential, target: Potential, cfg: ExperimentConfig,
                        label: str):
    """Hoelder bounds of phi' from the growth constants of V and W"""
    p, q = cfg.check.holder_p, cfg.check.convexity_q
    tolerance, pairs = cfg.check.tolerance, _pairs(cfg)
    c_p = holder_gradient_constant(source, p, search=_SEARCH_1D)
    c_q = convexity_gradient_constant(target, q, search=_SEARCH_1D)
    a_p = second_difference_constant(source, p, upper=True, search=_SEARCH_1D)
    a_q = second_difference_constant(target, q, upper=False, search=_SEARCH_1D)
    logger.debug("%s: C_p=%.6g C_q=%.6g A_p=%.6g A_q=%.6g", label, c_p, c_q, a_p, a_q)
    mapping = _rows_map(tm)
    constant, alpha = vf.sodin_amplified_constant(a_p, p, a_q, q)
    delta = tabulate_modulus(target, ModulusKind.DELTA, search=_SEARCH_1D)
    return [
        vf.check_theorem1(tm, p, q, c_p, c_q, pairs, cfg.seed, tolerance, f"{label}_theorem1"),
        vf.check_theorem_hoelder(a_p, p, a_q, q, vf.quotient_from_map_1d(tm), tm.band, pairs, cfg.seed,
                                 tolerance=tolerance, check_id=f"{label}_hoelder"),
        vf.check_gradient_holder(mapping, alpha, constant, tm.band, pairs, cfg.seed, tolerance=tolerance,
                                 check_id=f"{label}_gradient_holder"),
        vf.ms_modulus_bound_check(mapping, delta, tm.band, pairs, cfg.seed, tolerance=tolerance,
                                  check_id=f"{label}_ms_modulus"),
    ]


def _transport1d(source: Potential, target: Potential, cfg: ExperimentConfig, label: str) -> Outcome:
    tm = t1.build_map_1d(source, target, cfg.solver.resolution)
    if isinstance(target.family, UniformBody):
        reports = _tightness_reports(tm, source, target, label)
    else:
        reports = _regularity_reports(tm, source, target, cfg, label)
    if isinstance(target.family, Gaussian):
        reports.append(vf.check_caffarelli(tm, 1.0 / target.family.variance, cfg.check.tolerance,
                                           check_id=f"{label}_caffarelli"))
    table = Table(f"{label}_map", ("x", "T", "dT"), t1.map_table(tm, cfg.check.nodes), ("T", "dT"))
    return Outcome(tuple(reports), (table,))


def _transport1d_configured(cfg: ExperimentConfig) -> Outcome:
    source = parse_measure(cfg.measure.source, 1, "measure.source")
    target = parse_measure(cfg.measure.target, 1, "measure.target")
    return _transport1d(source, target, cfg, "transport1d")


def _gaussian_uniform(cfg: ExperimentConfig) -> Outcome:
    source = make_potential(Gaussian(1))
    target = parse_measure("uniform:-1:1", 1, "measure.target")
    return _transport1d(source, target, cfg, "gaussian_uniform")


def _gaussian_quartic(cfg: ExperimentConfig) -> Outcome:
    return _transport1d(make_potential(Gaussian(1)), make_potential(PowerLaw(1, 4.0)), cfg, "gaussian_quartic")


def _gaussian_variance2(cfg: ExperimentConfig) -> Outcome:
    """The p = q = 1 case: the sharper constant and its ordering against the general one"""
    source, target = make_potential(Gaussian(1)), make_potential(Gaussian(1, variance=2.0))
    tm = t1.build_map_1d(source, target, cfg.solver.resolution)
    a_p = second_difference_constant(source, 1.0, upper=True, search=_SEARCH_1D)
    a_q = second_difference_constant(target, 1.0, upper=False, search=_SEARCH_1D)
    reports = (
        vf.check_sharper_quadratic(a_p, a_q, vf.quotient_from_map_1d(tm), tm.band, _pairs(cfg), cfg.seed,
                                   tolerance=cfg.check.tolerance, check_id="gaussian_variance2_sharper"),
        vf.check_bound_ordering(a_p, a_q, check_id="gaussian_variance2_ordering"),
    )
    return Outcome(reports)


def _caffarelli(k_lower: float, cfg: ExperimentConfig) -> Outcome:
    source, target = make_potential(Gaussian(1)), make_potential(Gaussian(1, variance=1.0 / k_lower))
    tm = t1.build_map_1d(source, target, cfg.solver.resolution)
    return Outcome((vf.check_caffarelli(tm, k_lower, cfg.check.tolerance, check_id=f"caffarelli_k{k_lower:g}"),))


def _moduli_lemma(cfg: ExperimentConfig) -> Outcome:
    """Ten random convex polynomials on the line and ten in the plane"""
    rng = derived_rng(cfg.seed, "moduli_lemma")
    t_grid = np.array([0.1, 0.25, 0.5, 1.0, 2.0])
    reports = list()
    for i in range(20):
        d = 1 if i < 10 else 2
        pot = make_potential(_random_polynomial(rng, d))
        search = _SEARCH_1D if d == 1 else _SEARCH_2D
        reports.append(vf.check_moduli_lemma(pot, t_grid, search=search, check_id=f"moduli_lemma_{i}"))
    return Outcome(tuple(reports))


def _sodin(cfg: ExperimentConfig) -> Outcome:
    """|x|^2/2 and fifty random quadratics plus quartics in the plane"""
    rng = derived_rng(cfg.seed, "sodin_lemma")
    square = ConvexPolynomial(2, ((1.0, 0.0), (0.0, 1.0)))
    reports = [vf.sodin_bound_check(square.energy, square.gradient, (0.3, -0.2), 0.5, (1.0, 0.0),
                                    seed=cfg.seed, check_id="sodin_lemma_square")]
    for i in range(50):
        family = _random_polynomial(rng, 2)
        x = rng.uniform(-1.0, 1.0, 2)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        h = (math.cos(angle), math.sin(angle))
        reports.append(vf.sodin_bound_check(family.energy, family.gradient, x, float(rng.uniform(0.05, 1.0)), h,
                                            seed=cfg.seed, check_id=f"sodin_lemma_{i}"))
    return Outcome(tuple(reports))


# ---------------------------------------------------------------- entropic transport

def _converged(result: Result[tn.EntropicTransport, tn.NonConvergence]) -> tn.EntropicTransport:
    """:raises NonConvergenceError:"""
    return result.get_or_raise(lambda partial_solution: partial_solution.error)


def _solve(source: Potential, target, cfg: ExperimentConfig) -> Task[tn.EntropicTransport]:
    """The Sinkhorn step; a stalled solver surfaces as NonConvergenceError when the task runs"""
    epsilon = cfg.solver.epsilon if cfg.solver.epsilon > 0 else None
    return Task.effect(lambda: tn.solve_entropic(source, target, cfg.solver.n, cfg.solver.m, epsilon,
                                                 cfg.solver.tol, cfg.solver.max_iter, cfg.seed,
                                                 cfg.solver.dual_tol)).map(_converged)


def _directions(d: int) -> list[np.ndarray]:
    axes = list(np.eye(d))
    return axes + [np.ones(d) / math.sqrt(d)]


def _nd_outcome(source: Potential, body, label: str, cfg: ExperimentConfig, tp: tn.EntropicTransport) -> Outcome:
    """
        Regularity of the entropic map onto a uniform body. A Huber-product source is checked against
        the dimension-free bounds with p = -1/2, other sources against the Gaussian ones.
    """
    d = source.dimension
    diameter = body.diameter()
    product = isinstance(source.family, HuberProduct)
    p = -0.5 if product else None
    lipschitz = measure_set_product_bound(d, diameter, -0.5) if product else measure_set_bound(d, diameter)
    alpha = cfg.check.alpha
    bound = lipschitz ** alpha * diameter ** (1.0 - alpha)
    notes = (f"diam={diameter:.6g}", f"epsilon={tp.epsilon:.4g}", f"iterations={tp.iterations_run}")
    found = tn.empirical_holder_nd(tp, alpha, _pairs(cfg), cfg.seed)
    hessian = tn.empirical_hessian_norm_nd(tp)
    reports = [
        vf.make_report(f"{label}_holder", "|T(x) - T(y)| <= L^alpha diam^(1-alpha) |x - y|^alpha", bound,
                       found.value, cfg.check.slack, 0.0, found.point, cfg.seed, notes + (f"alpha={alpha:g}",)),
        vf.make_report(f"{label}_hessian", "||D^2 phi|| <= L", lipschitz, hessian.value, cfg.check.slack, 0.0,
                       hessian.point, cfg.seed, notes),
        vf.make_report(f"{label}_monotone", "<T(x) - T(y), x - y> >= 0", 0.0, -tn.monotonicity_gap(tp, seed=cfg.seed),
                       1.0, 1e-9, seed=cfg.seed),
    ]
    for i, h in enumerate(_directions(d)):
        lam, m = curvature_bounds(source, h)
        reports.append(vf.second_order_envelope_check(
            vf.sample_entropic(tp, h), tn.supporting_slab(body, h), lam, d, m=m if product else None, p=p,
            slack=cfg.check.envelope_slack, check_id=f"{label}_envelope_h{i}"))
    header = tuple(f"x{k}" for k in range(d)) + tuple(f"T{k}" for k in range(d)) + ("f",)
    return Outcome(tuple(reports), (Table(f"{label}_plan", header, tn.plan_rows(tp)),))


def _transport_nd(source_text: str, body_text: str, dimension: int, label: str,
                  cfg: ExperimentConfig) -> Task[Outcome]:
    """Parse the measures, solve, then check; parse errors surface when the task runs"""
    source = parse_measure(source_text, dimension, "measure.source")
    body = parse_body(body_text, dimension)
    return _solve(source, body, cfg).map(partial(_nd_outcome, source, body, label, cfg))


def _transport_nd_configured(cfg: ExperimentConfig) -> Task[Outcome]:
    return _transport_nd(cfg.measure.source, cfg.measure.body, cfg.measure.dimension, "transportnd", cfg)


def _nd_fixed(source_text: str, body_text: str, label: str, cfg: ExperimentConfig) -> Task[Outcome]:
    return _transport_nd(source_text, body_text, 2, label, cfg)


def _ms_outcome(target: Potential, cfg: ExperimentConfig, tp: tn.EntropicTransport) -> Outcome:
    delta = tabulate_modulus(target, ModulusKind.DELTA, grid=modulus_grid(4.0, 32), search=_SEARCH_2D)
    domain = (np.quantile(tp.source_samples, 0.01, axis=0), np.quantile(tp.source_samples, 0.99, axis=0))
    report = vf.ms_modulus_bound_check(partial(tn.map_eval, tp), delta, domain, _pairs(cfg), cfg.seed,
                                       slack=1.2, tolerance=cfg.check.tolerance, check_id="ms_modulus_entropic")
    return Outcome((report,))


def _ms_entropic(cfg: ExperimentConfig) -> Task[Outcome]:
    """Gaussian onto exp(-|x|^4) in the plane against 8 delta^{-1}(4 |x - y|^2), slack 1.2"""
    source, target = make_potential(Gaussian(2)), make_potential(PowerLaw(2, 4.0))
    return _solve(source, target, cfg).map(partial(_ms_outcome, target, cfg))


# ---------------------------------------------------------------- concentration

def _concentration(pot: Potential, cfg: ExperimentConfig, label: str) -> Outcome:
    """Enlargements of the half-space {x_1 <= 0} for every configured radius"""
    radii = cfg.check.radii
    delta = tabulate_modulus(pot, ModulusKind.DELTA, grid=modulus_grid(max(radii) / 8.0, 24),
                             search=_SEARCH_1D if pot.dimension == 1 else _SEARCH_2D)
    base = HalfSpace(tuple([1.0] + [0.0] * (pot.dimension - 1)), 0.0)
    reports = list()
    for r in radii:
        query = EnlargementQuery(base, r, sample_count=cfg.check.samples, seed=cfg.seed)
        reports.extend(check_ms_concentration(pot, query, delta, check_id=f"{label}_r{r:g}"))
    rows = concentration_profile(pot, base, radii, delta, sample_count=cfg.check.samples, seed=cfg.seed)
    table = Table(f"{label}_profile", ("r", "empirical", "profile_bound", "exp_bound", "ci"), rows,
                  ("empirical", "profile_bound", "exp_bound"))
    return Outcome(tuple(reports), (table,))


def _concentration_configured(cfg: ExperimentConfig) -> Outcome:
    pot = parse_measure(cfg.measure.source, cfg.measure.dimension, "measure.source")
    return _concentration(pot, cfg, "concentration")


def _concentration_quartic(cfg: ExperimentConfig) -> Outcome:
    return _concentration(make_potential(PowerLaw(2, 4.0)), cfg, "concentration_quartic")


def _transport_inequalities(cfg: ExperimentConfig) -> Outcome:
    """Shifted Gaussian (the equality case) and ten random perturbations of the standard Gaussian"""
    nu = make_potential(Gaussian(1))
    b = tabulate_modulus(nu, ModulusKind.BREGMAN, search=_SEARCH_1D)
    b_conjugate = conjugate_modulus(b)
    shifted = make_potential(Gaussian(1, mean=(0.7,)))
    reports = [
        talagrand_check(nu, shifted, b, tolerance=1e-6, check_id="talagrand_shifted"),
        mlsi_check(nu, shifted, b_conjugate, tolerance=1e-6, check_id="mlsi_shifted"),
    ]
    rng = derived_rng(cfg.seed, "transport_inequalities")
    for i in range(10):
        perturbed = make_potential(ConvexPolynomial(
            1, ((float(rng.uniform(0.5, 2.0)),),), float(rng.uniform(0.0, 0.2)), (float(rng.uniform(-1.0, 1.0)),)))
        reports.append(talagrand_check(nu, perturbed, b, check_id=f"talagrand_random_{i}"))
        reports.append(mlsi_check(nu, perturbed, b_conjugate, check_id=f"mlsi_random_{i}"))
    return Outcome(tuple(reports))


def _marton(cfg: ExperimentConfig) -> Outcome:
    """Half-line {x <= 0}: exact masses for the Gaussian, Monte Carlo for exp(-x^4)"""
    base = HalfSpace((1.0,), 0.0)
    reports = list()
    gaussian = make_potential(Gaussian(1))
    b_tilde = convexify_modulus(tabulate_modulus(gaussian, ModulusKind.BREGMAN, search=_SEARCH_1D))
    for r in _MARTON_RADII:
        reports.extend(marton_check(gaussian, base, r, b_tilde, seed=cfg.seed, check_id=f"marton_gaussian_r{r:g}"))
        reports.append(vf.make_report(f"marton_bound_gaussian_r{r:g}", "nu(A_r) >= 1 - 2 exp(-2 b~(r/2))",
                                      float(special.ndtr(r)), marton_concentration_bound(r, b_tilde), seed=cfg.seed))
    quartic = make_potential(PowerLaw(1, 4.0))
    b_quartic = convexify_modulus(tabulate_modulus(quartic, ModulusKind.BREGMAN, search=_SEARCH_1D))
    for r in (0.5, 1.0, 2.0):
        reports.extend(marton_check(quartic, base, r, b_quartic, sample_count=cfg.check.samples, seed=cfg.seed,
                                    check_id=f"marton_quartic_r{r:g}"))
    return Outcome(tuple(reports))


def _gaussian_tail(cfg: ExperimentConfig) -> Outcome:
    _ = cfg  # a dummy operation for an unused argument
    return Outcome((gaussian_tail_check(),))


# ---------------------------------------------------------------- orchestration

_APPENDIX: list[tuple[str, CheckFn]] = [
    ("transport_inequalities", _step(_transport_inequalities)),
    ("marton", _step(_marton)),
    ("gaussian_tail", _step(_gaussian_tail)),
]


def checks_for(command: str) -> list[tuple[str, CheckFn]]:
    """The checks a command runs, in report order"""
    match command:
        case "envelope":
            return [("envelope", _step(_envelope_configured)), ("g_pushforward", _step(_g_pushforward))]
        case "transport1d":
            return [("transport1d", _step(_transport1d_configured))]
        case "transportnd":
            return [("transportnd", _transport_nd_configured)]
        case "concentrate":
            return [("concentration", _step(_concentration_configured))] + _APPENDIX
        case "suite":
            return (
                [(f"envelope_oracle_p{p:g}", _step(partial(_envelope_oracle, p))) for p in _ENVELOPE_EXPONENTS]
                + [("g_pushforward", _step(_g_pushforward)),
                   ("gaussian_uniform", _step(_gaussian_uniform)),
                   ("gaussian_quartic", _step(_gaussian_quartic)),
                   ("gaussian_variance2", _step(_gaussian_variance2))]
                + [(f"caffarelli_k{k:g}", _step(partial(_caffarelli, k))) for k in _CAFFARELLI_K]
                + [("moduli_lemma", _step(_moduli_lemma)),
                   ("sodin_lemma", _step(_sodin)),
                   ("concentration_quartic", _step(_concentration_quartic))]
                + _APPENDIX
                + [("nd_gaussian_box", partial(_nd_fixed, "gaussian", "box:-1:1", "nd_gaussian_box")),
                   ("nd_gaussian_ball", partial(_nd_fixed, "gaussian", "ball:1", "nd_gaussian_ball")),
                   ("nd_huber_box", partial(_nd_fixed, "huber", "box:-1:1", "nd_huber_box")),
                   ("ms_modulus_entropic", _ms_entropic)]
            )
    raise ConfigError("command", f"no checks for '{command}'")


def _failed(check_id: str, err: Exception, seed: int) -> Outcome:
    """A check that raised: inconclusive after non-convergence, failed otherwise"""
    logger.error("check %s raised %s: %s", check_id, type(err).__name__, err)
    status = vf.Status.INCONCLUSIVE if isinstance(err, NonConvergenceError) else vf.Status.FAIL
    report = vf.make_report(check_id, "the check ran to completion", math.nan, math.nan, seed=seed,
                            notes=(f"{type(err).__name__}: {err}",), status=status)
    return Outcome((report,))


def exit_code(reports: Iterable[dict]) -> int:
    statuses = {r["status"] for r in reports}
    if vf.Status.FAIL.value in statuses:
        return EXIT_FAILED
    if vf.Status.INCONCLUSIVE.value in statuses:
        return EXIT_NUMERICAL
    return EXIT_OK


def _write_tables(tables: Sequence[Table], cfg: ExperimentConfig, digest: str):
    out = Path(cfg.output.directory)
    for table in tables:
        write_csv(out / f"{table.name}.csv", table.header, table.rows, digest, cfg.seed)
        if cfg.output.plots and table.plot:
            series = {name: table.rows[:, table.header.index(name)] for name in table.plot}
            write_svg(out / f"{table.name}.svg", table.rows[:, 0], series, table.name, digest, cfg.seed)


def run_command(cfg: ExperimentConfig) -> int:
    """
        Runs the checks of cfg.command on cfg.jobs workers, writes the report JSON and the tables,
        prints the summary and returns the exit code.
    """
    digest = config_digest(cfg)
    checks = checks_for(cfg.command)
    tasks = [Task.pure(cfg).bind(build) for _, build in checks]
    logger.info("running %d checks on %d workers", len(tasks), cfg.jobs)
    reports, tables = list(), list()
    for (check_id, _), result in zip(checks, run_all(tasks, cfg.jobs)):
        outcome = result.unfold(ok=lambda o: o, err=lambda e, c=check_id: _failed(c, e, cfg.seed))
        reports.extend(r.with_provenance(digest, cfg.seed) for r in outcome.reports)
        tables.extend(outcome.tables)
    path = write_reports(Path(cfg.output.directory) / f"{cfg.command}-reports.json", reports, digest, cfg.seed)
    _write_tables(tables, cfg, digest)
    logger.info("reports written to %s", path)
    rows = [r.to_dict() for r in reports]
    print(summary_table(rows))
    return exit_code(rows)


def _report(paths: Sequence[str], cfg: ExperimentConfig) -> int:
    files = [Path(p) for p in paths] or sorted(Path(cfg.output.directory).glob("*-reports.json"))
    if not files:
        raise ConfigError("output.directory", f"no report files in {cfg.output.directory}")
    rows = list()
    for path in files:
        try:
            rows.extend(read_reports(path))
        except (OSError, ValueError) as err:
            raise ConfigError(str(path), f"can not read the report file: {err}")
    print(summary_table(rows))
    return exit_code(rows)


def _on_measures(cfg: ExperimentConfig):
    """Parses the measure descriptions a command uses. :raises ConfigError:"""
    match cfg.command:
        case "transport1d":
            parse_measure(cfg.measure.source, 1, "measure.source")
            parse_measure(cfg.measure.target, 1, "measure.target")
        case "transportnd":
            parse_measure(cfg.measure.source, cfg.measure.dimension, "measure.source")
            parse_body(cfg.measure.body, cfg.measure.dimension)
        case "concentrate":
            parse_measure(cfg.measure.source, cfg.measure.dimension, "measure.source")


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", type=Path, help="TOML experiment file")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="worker threads for independent checks")
    common.add_argument("--log-level", dest="log_level")
    common.add_argument("--output", help="output directory")
    common.add_argument("--plots", action="store_true", default=None, help="also write SVG plots")
    common.add_argument("--p", type=float, help="envelope exponent")
    common.add_argument("--a", type=float, help="envelope half-width")
    common.add_argument("--source", help="source measure, e.g. gaussian or poly:1:0.5")
    common.add_argument("--target", help="target measure, e.g. uniform:-1:1 or powerlaw:4")
    common.add_argument("--body", help="target body, e.g. box:-1:1 or ball:1")
    common.add_argument("--dimension", type=int)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brenierlab", allow_abbrev=False,
        description="Numerical checks of regularity bounds for optimal transport maps.",
        epilog="Any config field can be set with --section.key=value.",
    )
    common = _common_options()
    commands = parser.add_subparsers(dest="command", required=True)
    for name, text in (
            ("envelope", "tabulate f_{p,a} and compare it with the shooting solution"),
            ("transport1d", "one-dimensional maps and their regularity bounds"),
            ("transportnd", "entropic maps in 2D or 3D and the measure-set bounds"),
            ("concentrate", "concentration profiles and transport inequalities"),
            ("suite", "the whole battery of checks"),
    ):
        commands.add_parser(name, parents=[common], help=text, allow_abbrev=False)
    report = commands.add_parser("report", parents=[common], help="summary of report files", allow_abbrev=False)
    report.add_argument("paths", nargs="*", help="report files (default: every report in the output directory)")
    return parser


def _load(args: argparse.Namespace, extra: Sequence[str]) -> ExperimentConfig:
    """:raises ConfigError:"""
    overrides = list()
    for item in extra:
        if not item.startswith("--") or "=" not in item or "." not in item.partition("=")[0]:
            raise ConfigError(item, "unrecognized argument, expected --section.key=value")
        overrides.append(item)
    flags = {
        "command": args.command,
        "seed": args.seed,
        "jobs": args.jobs,
        "logging.level": args.log_level,
        "output.directory": args.output,
        "output.plots": args.plots,
        "check.p": args.p,
        "check.a": args.a,
        "measure.source": args.source,
        "measure.target": args.target,
        "measure.body": args.body,
        "measure.dimension": args.dimension,
    }
    return load_config(args.config, overrides, **flags)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args, extra = build_parser().parse_known_args(argv)
    try:
        cfg = _load(args, extra)
        logging.basicConfig(level=cfg.logging.level.upper(), format=_LOG_FORMAT, stream=sys.stderr, force=True)
        if cfg.command == "report":
            return _report(args.paths, cfg)
        _on_measures(cfg)
    except ConfigError as err:
        print(f"brenierlab: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return run_command(cfg)
