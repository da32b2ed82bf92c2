"""
    Concentration inequalities by Monte Carlo and quadrature.

    Enlargements A_r = {y : dist(y, A) <= r} of half-spaces and balls are measured by sampling with
    closed-form distances. Lower bounds derived from the convexity modulus of the measure are compared
    with the estimates; the transport inequalities (Talagrand and modified log-Sobolev type) are checked
    in one dimension, where the transport map is exact.
"""
import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate, special
from scipy.stats import binomtest

from brenierlab.common._guards import on_dimension_mismatch, on_outside_interval
from brenierlab.common.exceptions import DomainError, ParameterRangeError
from brenierlab.measures import (
    Ball,
    ConvexityModulus,
    Gaussian,
    ModulusKind,
    Potential,
    cdf_1d,
    density,
    quantile_1d,
    sample,
    support_1d,
)
from brenierlab.search import Norm, derived_rng, dual_norm_of, norm_of
from brenierlab.verify import Status, VerificationReport, make_report


__all__ = [
    "HalfSpace",
    "EnlargementQuery",
    "Estimate",
    "distance_to_set",
    "enlargement_probability",
    "ms_profile_bound",
    "ms_exp_bound",
    "check_ms_concentration",
    "concentration_profile",
    "talagrand_check",
    "mlsi_check",
    "marton_concentration_bound",
    "marton_check",
    "gaussian_tail_check",
]


logger = logging.getLogger(__name__)

_Z95 = 1.959963984540054


@dataclass(frozen=True, slots=True, repr=True)
class HalfSpace:
    """{x : <normal, x> <= offset}"""
    normal: tuple[float, ...]
    offset: float


BaseSet = Union[HalfSpace, Ball]


@dataclass(frozen=True, slots=True, repr=True)
class EnlargementQuery:
    base_set: BaseSet
    r: float
    norm: Norm = Norm.L2
    sample_count: int = 1_000_000
    seed: int = 0


@dataclass(frozen=True, slots=True, repr=True)
class Estimate:
    """A Monte Carlo frequency with the half-width of its 95% interval"""
    value: float
    ci_halfwidth: float
    count: int

    @property
    def lower(self) -> float:
        return max(self.value - self.ci_halfwidth, 0.0)

    @property
    def upper(self) -> float:
        return min(self.value + self.ci_halfwidth, 1.0)


def _frequency(hits: int, count: int) -> Estimate:
    """Normal approximation, Wilson score interval when fewer than 10 hits or misses"""
    value = hits / count
    if min(hits, count - hits) >= 10:
        return Estimate(value, _Z95 * math.sqrt(value * (1.0 - value) / count), count)
    interval = binomtest(hits, count).proportion_ci(confidence_level=0.95, method="wilson")
    return Estimate(value, max(value - interval.low, interval.high - value), count)


def distance_to_set(base: BaseSet, x, norm: Norm = Norm.L2) -> np.ndarray:
    """
        Closed-form distance of rows x to a half-space (through the dual norm of its normal)
        or to a ball of the same norm.
    """
    match base:
        case HalfSpace(normal=normal, offset=offset):
            n = np.asarray(normal, dtype=float)
            rows = np.atleast_2d(on_dimension_mismatch(x, len(n)))
            scale = float(dual_norm_of(n, norm)[0])
            return np.maximum(rows @ n - offset, 0.0) / scale
        case Ball(center=center, radius=radius):
            c = np.asarray(center, dtype=float)
            rows = np.atleast_2d(on_dimension_mismatch(x, len(c)))
            return np.maximum(norm_of(rows - c, norm) - radius, 0.0)
    raise ParameterRangeError("base_set", base, "a half-space or a ball")


def _samples(pot: Potential, count: int, seed: int, stream: str) -> np.ndarray:
    return sample(pot, count, derived_rng(seed, stream), method="random")


def enlargement_probability(pot: Potential, q: EnlargementQuery, points=None) -> Estimate:
    """
        Fraction of samples of the measure within distance r of the base set.
        :raises DomainError: r < 0
    """
    if q.r < 0:
        raise DomainError("r", q.r, "[0, inf)")
    x = _samples(pot, q.sample_count, q.seed, "enlargement") if points is None else points
    hits = int(np.count_nonzero(distance_to_set(q.base_set, x, q.norm) <= q.r))
    return _frequency(hits, len(x))


def _delta_at(delta: ConvexityModulus, r: float) -> float:
    if delta.kind != ModulusKind.DELTA:
        raise ParameterRangeError("kind", delta.kind.value, "delta")
    return float(delta.at(r / 8.0))


def ms_profile_bound(nu_a: float, r: float, delta: ConvexityModulus) -> float:
    """
        Phi(Phi^{-1}(nu(A)) + sqrt(delta(r/8)) / 2) with the standard Gaussian distribution function.
        :raises DomainError: nu(A) outside (0, 1) or r/8 beyond the tabulated modulus
    """
    on_outside_interval("nu(A)", nu_a, 0.0, 1.0, closed=False)
    return float(special.ndtr(special.ndtri(nu_a) + 0.5 * math.sqrt(_delta_at(delta, r))))


def ms_exp_bound(nu_a_ge_half: bool, r: float, delta: ConvexityModulus) -> float:
    """
        1 - exp(-delta(r/8) / 8) / 2 for nu(A) >= 1/2.
        :raises ParameterRangeError: the flag is false
    """
    if not nu_a_ge_half:
        raise ParameterRangeError("nu(A) >= 1/2", nu_a_ge_half, "True")
    return 1.0 - 0.5 * math.exp(-_delta_at(delta, r) / 8.0)


_EXP_PRINTED = "printed with exp(+delta(r/8)/8); evaluated with the negative exponent"


def check_ms_concentration(pot: Potential, q: EnlargementQuery, delta: ConvexityModulus,
                           check_id: str = "ms_concentration") -> list[VerificationReport]:
    """
        nu(A_r) >= profile bound and >= exponential bound, each up to the Monte Carlo interval.
        nu(A) is estimated from the same samples.
    """
    x = _samples(pot, q.sample_count, q.seed, "enlargement")
    base = enlargement_probability(pot, EnlargementQuery(q.base_set, 0.0, q.norm, q.sample_count, q.seed), x)
    grown = enlargement_probability(pot, q, x)
    nu_a = min(max(base.value, 1.0 / base.count), 1.0 - 1.0 / base.count)
    profile = ms_profile_bound(nu_a, q.r, delta)
    reports = [make_report(f"{check_id}_profile", "nu(A_r) >= Phi(Phi^{-1}(nu(A)) + sqrt(delta(r/8))/2)",
                           grown.value, profile, 1.0, grown.ci_halfwidth + base.ci_halfwidth, (q.r,), q.seed,
                           (f"nu(A)={base.value:.6g}", f"nu(A_r)={grown.value:.6g}"))]
    if base.upper >= 0.5:
        bound = ms_exp_bound(True, q.r, delta)
        reports.append(make_report(f"{check_id}_exp", "nu(A_r) >= 1 - exp(-delta(r/8)/8)/2", grown.value, bound,
                                   1.0, grown.ci_halfwidth, (q.r,), q.seed, (_EXP_PRINTED,)))
    return reports


def concentration_profile(pot: Potential, base: BaseSet, radii, delta: ConvexityModulus,
                          norm: Norm = Norm.L2, sample_count: int = 1_000_000, seed: int = 0) -> np.ndarray:
    """Rows (r, empirical, profile_bound, exp_bound, ci) on shared samples; exp_bound is nan when nu(A) < 1/2"""
    x = _samples(pot, sample_count, seed, "enlargement")
    nu_a = enlargement_probability(pot, EnlargementQuery(base, 0.0, norm, sample_count, seed), x)
    clipped = min(max(nu_a.value, 1.0 / sample_count), 1.0 - 1.0 / sample_count)
    rows = list()
    for r in np.asarray(radii, dtype=float):
        grown = enlargement_probability(pot, EnlargementQuery(base, float(r), norm, sample_count, seed), x)
        exp_bound = ms_exp_bound(True, r, delta) if nu_a.value >= 0.5 else math.nan
        rows.append((r, grown.value, ms_profile_bound(clipped, r, delta), exp_bound, grown.ci_halfwidth))
    return np.array(rows)


# ---------------------------------------------------------------- one-dimensional transport inequalities

def _on_one_dimensional(*pots: Potential):
    for pot in pots:
        if pot.dimension != 1:
            raise DomainError("dimension", pot.dimension, "{1}")


def _on_norm(norm) -> Norm:
    """:raises ParameterRangeError: not one of L1, L2, Linf"""
    try:
        return Norm(norm)
    except ValueError:
        raise ParameterRangeError("norm", norm, "L1, L2 or Linf")


def _on_connected_mass(perturbed: Potential):
    """:raises DomainError: f nu vanishes between two of its quantiles"""
    x = np.asarray(quantile_1d(perturbed, np.linspace(1e-6, 1.0 - 1e-6, 257)), dtype=float)
    rho = density(perturbed, x.reshape(-1, 1))
    if not np.all(rho > 0):
        raise DomainError("f", float(x[int(np.argmin(rho))]), "positive across the support of f nu")


def _on_positive_density_ratio(nu: Potential, perturbed: Potential):
    """:raises DomainError: f = 0 on part of the support of nu"""
    inner, outer = support_1d(perturbed), support_1d(nu)
    if inner[0] > outer[0] or inner[1] < outer[1]:
        raise DomainError("f", f"0 outside [{inner[0]:g}, {inner[1]:g}]", "f > 0 on the support of nu")


def _log_ratio(nu: Potential, perturbed: Potential, x: float) -> float:
    """log f = V_nu - V_f at a point where the perturbed density is positive"""
    point = np.array([[x]])
    return float(nu.family.energy(point)[0] + nu.log_normalizer
                 - perturbed.family.energy(point)[0] - perturbed.log_normalizer)


def _perturbed_density(perturbed: Potential, x: float) -> float:
    return math.exp(-(float(perturbed.family.energy(np.array([[x]]))[0]) + perturbed.log_normalizer))


def _entropy(nu: Potential, perturbed: Potential) -> float:
    """int f log f dnu = KL(f nu | nu)"""

    def integrand(x: float) -> float:
        rho = _perturbed_density(perturbed, x)
        return rho * _log_ratio(nu, perturbed, x) if rho > 0 else 0.0

    return integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-10, limit=400)[0]


def talagrand_check(nu: Potential, perturbed: Potential, b: ConvexityModulus, norm: Norm = Norm.L2,
                    tolerance: float = 1e-4, check_id: str = "talagrand") -> VerificationReport:
    """
        int b(|T(x) - x|) dnu <= int f log f dnu, T the monotone map of nu onto f nu,
        written as int_0^1 b(|Q_f(u) - Q_nu(u)|) du. perturbed is the measure f nu.
        :raises DomainError: not one-dimensional, or f nu with a zero-mass gap
        :raises ParameterRangeError: unknown norm or a modulus of the wrong kind
    """
    _on_one_dimensional(nu, perturbed)
    norm = _on_norm(norm)
    _on_connected_mass(perturbed)
    if b.kind not in (ModulusKind.BREGMAN, ModulusKind.BREGMAN_CONVEXIFIED):
        raise ParameterRangeError("kind", b.kind.value, "bregman")

    def integrand(u: float) -> float:
        shift = abs(float(quantile_1d(perturbed, u)) - float(quantile_1d(nu, u)))
        return float(b.at(shift, extrapolate=True))

    lhs = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-10, limit=400)[0]
    rhs = _entropy(nu, perturbed)
    notes = (f"norm={norm.value}, all norms agree in one dimension", "empirical: transport cost; theoretical: relative entropy")
    return make_report(check_id, "int b(|grad phi(x) - x|) dnu <= int f log f dnu", rhs, lhs, 1.0, tolerance,
                       notes=notes)


def mlsi_check(nu: Potential, perturbed: Potential, b_conjugate: ConvexityModulus, norm: Norm = Norm.L2,
               tolerance: float = 1e-4, check_id: str = "mlsi") -> VerificationReport:
    """
        int f log f dnu <= int b*(|(log f)'|) f dnu with (log f)' = V_nu' - V_f'.
        :raises DomainError: not one-dimensional, or f touching zero on the support of nu
        :raises ParameterRangeError: unknown norm or a modulus of the wrong kind
    """
    _on_one_dimensional(nu, perturbed)
    norm = _on_norm(norm)
    _on_positive_density_ratio(nu, perturbed)
    if b_conjugate.kind != ModulusKind.BREGMAN_CONJUGATE:
        raise ParameterRangeError("kind", b_conjugate.kind.value, "bregman_conjugate")

    def integrand(x: float) -> float:
        rho = _perturbed_density(perturbed, x)
        if rho <= 0:
            return 0.0
        point = np.array([[x]])
        score = float(nu.family.gradient(point)[0, 0] - perturbed.family.gradient(point)[0, 0])
        return rho * float(b_conjugate.at(abs(score), extrapolate=True))

    rhs = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-10, limit=400)[0]
    lhs = _entropy(nu, perturbed)
    notes = (f"norm={norm.value}, all norms agree in one dimension", "empirical: relative entropy; theoretical: conjugate modulus integral")
    return make_report(check_id, "int f log f dnu <= int b*(|grad f / f|) f dnu", rhs, lhs, 1.0, tolerance,
                       notes=notes)


# ---------------------------------------------------------------- Marton's argument

def marton_concentration_bound(r: float, b_tilde: ConvexityModulus) -> float:
    """nu(A_r) >= 1 - 2 exp(-2 b~(r/2)) for nu(A) >= 1/2"""
    if r < 0:
        raise DomainError("r", r, "[0, inf)")
    return 1.0 - 2.0 * math.exp(-2.0 * float(b_tilde.at(r / 2.0, extrapolate=True)))


def _marton_masses(nu: Potential, base: HalfSpace, r: float, norm: Norm, sample_count: int, seed: int):
    """(nu(A), nu(A_r^c)) as estimates; exact for a one-dimensional Gaussian"""
    if isinstance(nu.family, Gaussian) and nu.dimension == 1:
        n = float(base.normal[0])
        edge = base.offset / n
        inside = float(cdf_1d(nu, edge)) if n > 0 else 1.0 - float(cdf_1d(nu, edge))
        grown_edge = edge + r if n > 0 else edge - r
        outside = 1.0 - float(cdf_1d(nu, grown_edge)) if n > 0 else float(cdf_1d(nu, grown_edge))
        return Estimate(inside, 0.0, 0), Estimate(outside, 0.0, 0)
    x = _samples(nu, sample_count, seed, "marton")
    distance = distance_to_set(base, x, norm)
    inside = _frequency(int(np.count_nonzero(distance <= 0.0)), len(x))
    outside = _frequency(int(np.count_nonzero(distance > r)), len(x))
    return inside, outside


def marton_check(nu: Potential, base: HalfSpace, r: float, b_tilde: ConvexityModulus, norm: Norm = Norm.L2,
                 sample_count: int = 1_000_000, seed: int = 0,
                 check_id: str = "marton") -> list[VerificationReport]:
    """
        exp(2 b~(s)) <= 1 / (nu(A) nu(A_r^c)) with A_r the enlargement by r, for s = r/2 (the form the
        argument yields) and for s = r (the displayed form). Both reports are returned.
        A Monte Carlo interval of nu(A_r^c) that reaches 0 gives vacuous passes.
    """
    if b_tilde.kind not in (ModulusKind.BREGMAN_CONVEXIFIED, ModulusKind.BREGMAN):
        raise ParameterRangeError("kind", b_tilde.kind.value, "bregman_convexified")
    inside, outside = _marton_masses(nu, base, r, norm, sample_count, seed)
    vacuous = outside.count > 0 and outside.value - outside.ci_halfwidth <= 0.0
    product = inside.value * outside.value
    spread = inside.ci_halfwidth * outside.value + outside.ci_halfwidth * inside.value \
        + inside.ci_halfwidth * outside.ci_halfwidth
    notes = [f"nu(A)={inside.value:.6g}", f"nu(A_r^c)={outside.value:.6g}",
             "A_r is the enlargement {y : dist(y, A) <= r}; the display writes {y : |x - y| >= r}"]
    if inside.value < 0.5:
        notes.append("nu(A) < 1/2")
    reports = list()
    for suffix, s in (("chain", r / 2.0), ("displayed", r)):
        growth = math.exp(2.0 * float(b_tilde.at(s, extrapolate=True)))
        status = Status.VACUOUS if vacuous else None
        reports.append(make_report(f"{check_id}_{suffix}", "exp(2 b~(r)) <= 1 / (nu(A) nu(A_r^c))", 1.0,
                                   growth * product, 1.0, growth * spread, (r, s), seed, notes, status))
    return reports


def gaussian_tail_check(t_grid=None, tolerance: float = 1e-12, check_id: str = "gaussian_tail") -> VerificationReport:
    """Phi(t) >= 1 - exp(-t^2/2) / 2 on a grid of [0, 6]"""
    t = np.linspace(0.0, 6.0, 601) if t_grid is None else np.asarray(t_grid, dtype=float)
    gap = 1.0 - 0.5 * np.exp(-0.5 * t ** 2) - special.ndtr(t)
    k = int(np.argmax(gap))
    return make_report(check_id, "Phi(t) >= 1 - exp(-t^2/2)/2", 0.0, float(gap[k]), 1.0, tolerance, (t[k],))
