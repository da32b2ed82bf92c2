"""
    Executable bound checks.

    Every check computes a theoretical value from measure parameters and an empirical value from a
    transport object, and returns a VerificationReport. A report passes when

        empirical <= theoretical * slack + tolerance

    Suprema over continuous variables are taken on a Halton design in a unit cube with local refinement
    (see brenierlab.search); the maximizing input is stored as the witness.
"""
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy import stats

from brenierlab.common._guards import on_bad_exponents, on_non_positive, on_unit_vector
from brenierlab.common.exceptions import NotConvexError, ParameterRangeError
from brenierlab.envelope import caffarelli_refinement_bound, envelope_eval, envelope_ode_oracle, g_map, make_envelope
from brenierlab.measures import ConvexityModulus, ModulusKind, Potential, tabulate_modulus
from brenierlab.search import Norm, PairSpec, SearchSpec, derived_rng, sampled_supremum, unit_directions
from brenierlab import transport1d as t1
from brenierlab import transport_nd as tn


__all__ = [
    "Status",
    "VerificationReport",
    "DirectionalSample",
    "make_report",
    "hoelder_second_difference_bound",
    "quotient_from_map_1d",
    "quotient_from_entropic",
    "check_theorem_hoelder",
    "check_sharper_quadratic",
    "check_bound_ordering",
    "check_gradient_holder",
    "sodin_amplified_constant",
    "sodin_bound_check",
    "ms_modulus_bound_check",
    "sample_map_1d",
    "sample_entropic",
    "envelope_factor",
    "second_order_envelope_check",
    "check_caffarelli",
    "check_moduli_lemma",
    "check_theorem1",
    "check_envelope_oracle",
    "check_g_pushforward",
]


logger = logging.getLogger(__name__)

Domain = tuple[np.ndarray, np.ndarray]
QuotientFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
MapFn = Callable[[np.ndarray], np.ndarray]


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    VACUOUS = "vacuous"
    INCONCLUSIVE = "inconclusive"


def _json_number(value: float) -> Union[float, str]:
    value = float(value)
    return value if math.isfinite(value) else repr(value)


@dataclass(frozen=True, slots=True, repr=True)
class VerificationReport:
    check_id: str
    anchor: str
    theoretical: float
    empirical: float
    slack: float
    tolerance: float
    passed: bool
    status: Status
    witness: tuple[float, ...] = ()
    config_digest: str = ""
    seed: int = 0
    notes: tuple[str, ...] = ()

    def with_provenance(self, config_digest: str, seed: int) -> 'VerificationReport':
        return replace(self, config_digest=config_digest, seed=int(seed))

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "anchor": self.anchor,
            "theoretical": _json_number(self.theoretical),
            "empirical": _json_number(self.empirical),
            "slack": _json_number(self.slack),
            "tolerance": _json_number(self.tolerance),
            "passed": self.passed,
            "status": self.status.value,
            "witness": [_json_number(w) for w in self.witness],
            "config_digest": self.config_digest,
            "seed": self.seed,
            "notes": list(self.notes),
        }


def make_report(
        check_id: str,
        anchor: str,
        theoretical: float,
        empirical: float,
        slack: float = 1.0,
        tolerance: float = 0.0,
        witness=(),
        seed: int = 0,
        notes=(),
        status: Optional[Status] = None,
) -> VerificationReport:
    """
        A report with passed computed from the values; an explicit status (vacuous, inconclusive) overrides.
        :raises ParameterRangeError: slack < 1 or tolerance < 0
    """
    if not slack >= 1:
        raise ParameterRangeError("slack", slack, "slack >= 1")
    if not tolerance >= 0:
        raise ParameterRangeError("tolerance", tolerance, "tolerance >= 0")
    holds = bool(empirical <= theoretical * slack + tolerance)
    if status is None:
        status = Status.PASS if holds else Status.FAIL
    passed = status in (Status.PASS, Status.VACUOUS)
    if status == Status.VACUOUS:
        logger.warning("check %s passes vacuously", check_id)
    logger.debug("check %s: empirical %.6e vs theoretical %.6e (%s)", check_id, empirical, theoretical, status.value)
    return VerificationReport(
        check_id=check_id, anchor=anchor, theoretical=float(theoretical), empirical=float(empirical),
        slack=float(slack), tolerance=float(tolerance), passed=passed, status=Status(status),
        witness=tuple(float(w) for w in np.ravel(witness)), seed=int(seed), notes=tuple(notes),
    )


def _rng(seed, stream: str) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else derived_rng(int(seed), stream)


def _seed_of(seed) -> int:
    return seed if isinstance(seed, int) else 0


# ---------------------------------------------------------------- sampling of (x, h, t) triples

def _as_domain(domain) -> Domain:
    lo, hi = (np.atleast_1d(np.asarray(v, dtype=float)) for v in domain)
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ParameterRangeError("domain", domain, "lo < hi on every axis")
    return lo, hi


def _direction_columns(d: int) -> int:
    return d - 1


def _directions(unit: np.ndarray, d: int) -> np.ndarray:
    """Columns of the unit cube -> unit vectors (+1 in 1D, angle in 2D, uniform on the sphere in 3D)"""
    if d == 1:
        return np.ones((len(unit), 1))
    if d == 2:
        angle = 2.0 * math.pi * unit[:, 0]
        return np.column_stack([np.cos(angle), np.sin(angle)])
    z = 2.0 * unit[:, 0] - 1.0
    angle = 2.0 * math.pi * unit[:, 1]
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.column_stack([r * np.cos(angle), r * np.sin(angle), z])


def _triple_decoder(domain: Domain, pairs: PairSpec, t_min: Optional[float] = None):
    """Unit cube of dimension 2d -> (x, h, t) with x in the domain, t log-uniform, x +- t h in the domain"""
    lo, hi = domain
    d = len(lo)
    t_min = pairs.t_min if t_min is None else max(t_min, pairs.t_min)
    on_non_positive("t_min", t_min)
    if not pairs.t_max > t_min:
        raise ParameterRangeError("t_max", pairs.t_max, f"t_max > {t_min:.4g}")
    log_ratio = math.log(pairs.t_max / t_min)

    def decode(unit: np.ndarray):
        x = lo + (hi - lo) * unit[:, :d]
        t = t_min * np.exp(log_ratio * unit[:, d])
        h = _directions(unit[:, d + 1:], d)
        step = t[:, None] * h
        inside = np.all((x + step <= hi) & (x + step >= lo) & (x - step <= hi) & (x - step >= lo), axis=1)
        return x, h, t, inside

    return decode, 1 + d + _direction_columns(d)


def _supremum_over_triples(ratio_fn, domain: Domain, pairs: PairSpec, rng, t_min=None):
    decode, k = _triple_decoder(domain, pairs, t_min)

    def objective(unit: np.ndarray) -> np.ndarray:
        x, h, t, inside = decode(unit)
        values = np.full(len(x), np.nan)
        if np.any(inside):
            values[inside] = ratio_fn(x[inside], h[inside], t[inside])
        return values

    found = sampled_supremum(objective, k, pairs, rng)
    x, h, t, _ = decode(np.array([found.point]))
    return found.value, np.concatenate([x[0], h[0], t])


# ---------------------------------------------------------------- second-difference bounds

def hoelder_second_difference_bound(a_p: float, p: float, a_q: float, q: float) -> tuple[float, float]:
    """
        (K, 1 + alpha) with phi(x+th) + phi(x-th) - 2 phi(x) <= K t^(1+alpha), K = 2 (A_p/A_q)^(1/(q+1)).
        :raises ParameterRangeError:
    """
    on_bad_exponents(p, q)
    on_non_positive("A_p", a_p)
    on_non_positive("A_q", a_q)
    alpha = (p + 1.0) / (q + 1.0)
    return 2.0 * (a_p / a_q) ** (1.0 / (q + 1.0)), 1.0 + alpha


def quotient_from_map_1d(tm: t1.TransportMap1D) -> QuotientFn:
    def quotient(x: np.ndarray, h: np.ndarray, t: np.ndarray) -> np.ndarray:
        _ = h  # a dummy operation for an unused argument
        return np.asarray(t1.potential_second_difference(tm, x[:, 0], t))

    return quotient


def quotient_from_entropic(tp: tn.EntropicTransport) -> QuotientFn:
    def quotient(x: np.ndarray, h: np.ndarray, t: np.ndarray) -> np.ndarray:
        step = t[:, None] * h
        value = tn.potential_value
        return value(tp, x + step) + value(tp, x - step) - 2.0 * value(tp, x)

    return quotient


def check_theorem_hoelder(
        a_p: float,
        p: float,
        a_q: float,
        q: float,
        quotient_fn: QuotientFn,
        domain,
        pairs: PairSpec = PairSpec(),
        seed=0,
        slack: float = 1.0,
        tolerance: float = 1e-3,
        t_min: Optional[float] = None,
        check_id: str = "theorem_hoelder",
) -> VerificationReport:
    """
        sup of the second difference of phi over 2 (A_p/A_q)^(1/(q+1)) t^(1+alpha), compared with 1.
        :raises ParameterRangeError: exponents outside 0 <= p <= 1 <= q
    """
    constant, power = hoelder_second_difference_bound(a_p, p, a_q, q)

    def ratio(x, h, t):
        return quotient_fn(x, h, t) / (constant * t ** power)

    value, witness = _supremum_over_triples(ratio, _as_domain(domain), pairs, _rng(seed, check_id), t_min)
    anchor = "phi(x+th) + phi(x-th) - 2 phi(x) <= 2 (A_p/A_q)^(1/(q+1)) t^(1+alpha)"
    notes = (f"A_p={a_p:.6g} p={p:.6g} A_q={a_q:.6g} q={q:.6g}", "witness: x, h, t")
    return make_report(check_id, anchor, 1.0, value, slack, tolerance, witness, _seed_of(seed), notes)


def check_sharper_quadratic(
        a_p: float,
        a_q: float,
        quotient_fn: QuotientFn,
        domain,
        pairs: PairSpec = PairSpec(),
        seed=0,
        slack: float = 1.0,
        tolerance: float = 1e-3,
        check_id: str = "sharper_quadratic",
) -> VerificationReport:
    """The p = q = 1 case with the constant (A_p/A_q)^(1/2) in place of 2 (A_p/A_q)^(1/2)"""
    on_non_positive("A_p", a_p)
    on_non_positive("A_q", a_q)
    constant = math.sqrt(a_p / a_q)

    def ratio(x, h, t):
        return quotient_fn(x, h, t) / (constant * t ** 2)

    value, witness = _supremum_over_triples(ratio, _as_domain(domain), pairs, _rng(seed, check_id))
    anchor = "phi(x+th) + phi(x-th) - 2 phi(x) <= (A_p/A_q)^(1/2) t^2 for p = q = 1"
    return make_report(check_id, anchor, 1.0, value, slack, tolerance, witness, _seed_of(seed))


def check_bound_ordering(a_p: float, a_q: float, t_grid=None, check_id: str = "bound_ordering") -> VerificationReport:
    """The sharper quadratic bound never exceeds the general one: max of their ratio over the t grid"""
    t = np.logspace(-3, 1, 41) if t_grid is None else np.asarray(t_grid, dtype=float)
    general, power = hoelder_second_difference_bound(a_p, 1.0, a_q, 1.0)
    sharper = math.sqrt(a_p / a_q) * t ** 2
    ratios = sharper / (general * t ** power)
    k = int(np.argmax(ratios))
    anchor = "(A_p/A_q)^(1/2) t^2 <= 2 (A_p/A_q)^(1/2) t^2"
    return make_report(check_id, anchor, 1.0, float(ratios[k]), witness=(t[k],))


# ---------------------------------------------------------------- gradient moduli

def _pair_supremum(ratio_fn, domain: Domain, pairs: PairSpec, rng):
    """sup over pairs (x, x + t h) inside the domain of ratio_fn(x, y)"""

    def quotient(x, h, t):
        return ratio_fn(x, x + t[:, None] * h)

    decode, k = _triple_decoder(domain, pairs)

    def objective(unit: np.ndarray) -> np.ndarray:
        x, h, t, _ = decode(unit)
        y = x + t[:, None] * h
        ok = np.all((y >= domain[0]) & (y <= domain[1]), axis=1)
        values = np.full(len(x), np.nan)
        if np.any(ok):
            values[ok] = quotient(x[ok], h[ok], t[ok])
        return values

    found = sampled_supremum(objective, k, pairs, rng)
    x, h, t, _ = decode(np.array([found.point]))
    return found.value, np.concatenate([x[0], x[0] + t[0] * h[0]])


def check_gradient_holder(
        map_fn: MapFn,
        alpha: float,
        constant: float,
        domain,
        pairs: PairSpec = PairSpec(),
        seed=0,
        slack: float = 1.0,
        tolerance: float = 1e-3,
        check_id: str = "gradient_holder",
) -> VerificationReport:
    """
        sup |T(x) - T(y)| / |x - y|^alpha against C. map_fn maps rows to rows.
        The witness is the pair (x, y).
    """
    if not 0 < alpha <= 1:
        raise ParameterRangeError("alpha", alpha, "0 < alpha <= 1")
    on_non_positive("C", constant)

    def ratio(x, y):
        moved = np.linalg.norm(np.atleast_2d(map_fn(y)) - np.atleast_2d(map_fn(x)), axis=1)
        return moved / np.linalg.norm(y - x, axis=1) ** alpha

    value, witness = _pair_supremum(ratio, _as_domain(domain), pairs, _rng(seed, check_id))
    anchor = "|grad phi(x) - grad phi(y)| <= C |x - y|^alpha"
    notes = (f"alpha={alpha:.6g}", "witness: x, y")
    return make_report(check_id, anchor, constant, value, slack, tolerance, witness, _seed_of(seed), notes)


def sodin_amplified_constant(a_p: float, p: float, a_q: float, q: float) -> tuple[float, float]:
    """
        Hoelder constant and exponent of grad phi from the second-difference bound:
        4 * 2^(1+alpha) (A_p/A_q)^(1/(q+1)), alpha = (p+1)/(q+1).
    """
    constant, power = hoelder_second_difference_bound(a_p, p, a_q, q)
    return 2.0 * constant * 2.0 ** power, power - 1.0


def _on_convex_samples(value_fn, x: np.ndarray, radius: float, rng: np.random.Generator, count: int = 512):
    """
        Midpoint convexity on random chords of the ball of the given radius around x.
        :raises NotConvexError:
    """
    d = len(x)
    a = x + radius * (2.0 * rng.random((count, d)) - 1.0)
    b = x + radius * (2.0 * rng.random((count, d)) - 1.0)
    fa, fb, fm = value_fn(a), value_fn(b), value_fn(0.5 * (a + b))
    gap = fm - 0.5 * (fa + fb)
    scale = 1e-10 * max(1.0, float(np.max(np.abs(fa))), float(np.max(np.abs(fb))))
    if np.any(gap > scale):
        k = int(np.argmax(gap))
        raise NotConvexError("sampled function", tuple(np.concatenate([a[k], b[k]]).tolist()))


def sodin_bound_check(
        value_fn: MapFn,
        gradient_fn: MapFn,
        x,
        t: float,
        h,
        direction_count: int = 64,
        slack: float = 1.05,
        seed=0,
        check_id: str = "sodin_lemma",
) -> VerificationReport:
    """
        |grad f(x+th) - grad f(x)| <= (2/t) sup_{|v|=1} (f(x+2tv) + f(x-2tv) - 2f(x)),
        the supremum over direction_count sampled directions. value_fn and gradient_fn take rows.
        :raises NotConvexError: the function fails midpoint convexity on samples
    """
    on_non_positive("t", t)
    h = on_unit_vector(h)
    x = np.asarray(x, dtype=float).reshape(-1)
    rng = _rng(seed, check_id)
    _on_convex_samples(value_fn, x, 4.0 * t, rng)
    lhs = float(np.linalg.norm(gradient_fn((x + t * h)[None, :])[0] - gradient_fn(x[None, :])[0]))
    directions = unit_directions(len(x), Norm.L2, direction_count)
    centre = float(value_fn(x[None, :])[0])
    second = value_fn(x + 2.0 * t * directions) + value_fn(x - 2.0 * t * directions) - 2.0 * centre
    k = int(np.argmax(second))
    rhs = 2.0 / t * float(second[k])
    anchor = "|grad f(x+th) - grad f(x)| <= (2/t) sup_v (f(x+2tv) + f(x-2tv) - 2f(x))"
    notes = (f"directions={len(directions)}", "witness: maximizing direction")
    return make_report(check_id, anchor, rhs, lhs, slack, 1e-12, directions[k], _seed_of(seed), notes)


def ms_modulus_bound_check(
        map_fn: MapFn,
        delta: ConvexityModulus,
        domain,
        pairs: PairSpec = PairSpec(),
        seed=0,
        slack: float = 1.0,
        tolerance: float = 1e-3,
        check_id: str = "ms_modulus",
) -> VerificationReport:
    """
        sup |T(x) - T(y)| / (8 delta^{-1}(4 |x - y|^2)) compared with 1.
        Inversions beyond the tabulated modulus use its tail power fit and are noted in the report.
        :raises DomainError: delta is flat at a required level
    """
    if delta.kind != ModulusKind.DELTA:
        raise ParameterRangeError("kind", delta.kind.value, "delta")
    extrapolated = list()

    def ratio(x, y):
        moved = np.linalg.norm(np.atleast_2d(map_fn(y)) - np.atleast_2d(map_fn(x)), axis=1)
        level, beyond = delta.inverse(4.0 * np.linalg.norm(y - x, axis=1) ** 2)
        if beyond:
            extrapolated.append(True)
        return moved / (8.0 * level)

    value, witness = _pair_supremum(ratio, _as_domain(domain), pairs, _rng(seed, check_id))
    notes = ["witness: x, y"]
    if extrapolated:
        notes.append("delta inverted beyond its grid by the fitted tail power")
    anchor = "|grad phi(x) - grad phi(y)| <= 8 delta^{-1}(4 |x - y|^2)"
    return make_report(check_id, anchor, 1.0, value, slack, tolerance, witness, _seed_of(seed), notes)


# ---------------------------------------------------------------- directional second derivative

@dataclass(frozen=True, slots=True, repr=False, eq=False)
class DirectionalSample:
    """phi_h and phi_hh at sample points for one unit direction h"""
    h: np.ndarray
    points: np.ndarray
    first: np.ndarray
    second: np.ndarray

    def __repr__(self) -> str:
        return f"DirectionalSample(h={tuple(self.h.tolist())}, points={len(self.points)})"


def sample_map_1d(tm: t1.TransportMap1D, points=None, count: int = 2001) -> DirectionalSample:
    """phi' and phi'' of an exact 1D map, by default on an even grid of the quantile band"""
    x = np.linspace(*tm.band, count) if points is None else np.asarray(points, dtype=float).reshape(-1)
    return DirectionalSample(np.ones(1), x[:, None], np.asarray(t1.map_eval(tm, x)), np.asarray(t1.map_derivative(tm, x)))


def sample_entropic(tp: tn.EntropicTransport, h, points=None) -> DirectionalSample:
    """phi_h and phi_hh of the entropic surrogate at the check points (or the given rows)"""
    h = on_unit_vector(h)
    rows = tn.check_points(tp) if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    first, second = tn.directional_derivatives(tp, rows, h)
    return DirectionalSample(h, rows, first, second)


def envelope_factor(lam: float, m: Optional[float], p: float) -> float:
    """sqrt(Lambda), or sqrt(Lambda + M^2 / (4 (1 + p))) for the dimension-free variant"""
    if m is None:
        return math.sqrt(lam)
    return math.sqrt(lam + m * m / (4.0 * (1.0 + p)))


def second_order_envelope_check(
        directional: DirectionalSample,
        slab: tuple[float, float],
        lam: float,
        dimension: int,
        m: Optional[float] = None,
        p: Optional[float] = None,
        slack: float = 1.2,
        tolerance: float = 1e-4,
        check_id: str = "second_order_envelope",
) -> VerificationReport:
    """
        phi_hh <= c f_{p,a}(phi_h - t0) at every sampled point with (t0, a) the supporting slab in direction h.
        Without M: p = (d-1)/4 and c = sqrt(Lambda). With M: the given p > -1 and c = sqrt(Lambda + M^2/(4(1+p))).
        The report holds the point with the largest excess; points with |phi_h - t0| > a beyond
        the tolerance make the report inconclusive.
    """
    if m is None:
        p = (dimension - 1) / 4.0
    elif p is None:
        raise ParameterRangeError("p", p, "an exponent p > -1 when M is given")
    t0, a = slab
    env = make_envelope(p, a)
    factor = envelope_factor(lam, m, p)
    shifted = directional.first - t0
    outside = np.abs(shifted) > a * (1.0 + 1e-6)
    notes = [f"p={p:.6g} a={a:.6g} t0={t0:.6g} factor={factor:.6g}"]
    bound = factor * np.asarray(envelope_eval(env, np.clip(shifted, -a, a)))
    excess = directional.second - (slack * bound + tolerance)
    k = int(np.argmax(np.where(outside, -np.inf, excess))) if not np.all(outside) else 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bound > 0, directional.second / bound, np.inf)
    notes.append(f"max ratio {float(np.max(np.where(outside, 0.0, ratios))):.6g}")
    status = None
    if np.any(outside):
        notes.append(f"{int(np.count_nonzero(outside))} points with phi_h outside the slab")
        status = Status.INCONCLUSIVE
    anchor = "phi_hh <= c f_{p,a}(phi_h - t0)"
    witness = np.concatenate([directional.points[k], directional.h])
    return make_report(check_id, anchor, float(bound[k]), float(directional.second[k]), slack, tolerance,
                       witness, 0, notes, status)


def check_caffarelli(tm: t1.TransportMap1D, k_lower: float, tolerance: float = 1e-3, count: int = 2001,
                     check_id: str = "caffarelli") -> VerificationReport:
    """max phi'' over the quantile band against 1/sqrt(K) for a target with W'' >= K"""
    bound = caffarelli_refinement_bound(k_lower)
    directional = sample_map_1d(tm, count=count)
    k = int(np.argmax(directional.second))
    anchor = "phi'' <= 1/sqrt(K) when W'' >= K"
    return make_report(check_id, anchor, bound, float(directional.second[k]), 1.0, tolerance, directional.points[k],
                       notes=(f"K={k_lower:.6g}",))


def check_moduli_lemma(
        pot: Potential,
        t_grid,
        norm: Norm = Norm.L2,
        search: SearchSpec = SearchSpec(),
        tolerance: float = 1e-6,
        check_id: str = "moduli_lemma",
) -> VerificationReport:
    """
        b(2t) - 2b(t) >= delta(t) >= 2b(t) on the t grid; the report holds the largest violation
        max(delta - (b(2t) - 2b(t)), 2b - delta) against 0.
    """
    t = np.asarray(t_grid, dtype=float)
    grid = np.unique(np.concatenate([[0.0], t, 2.0 * t]))
    delta = tabulate_modulus(pot, ModulusKind.DELTA, norm, grid, search)
    bregman = tabulate_modulus(pot, ModulusKind.BREGMAN, norm, grid, search)
    d_t = np.asarray(delta.at(t))
    b_t, b_2t = np.asarray(bregman.at(t)), np.asarray(bregman.at(2.0 * t))
    violation = np.maximum(d_t - (b_2t - 2.0 * b_t), 2.0 * b_t - d_t)
    k = int(np.argmax(violation))
    anchor = "b(2t) - 2b(t) >= delta(t) >= 2b(t)"
    return make_report(check_id, anchor, 0.0, float(violation[k]), 1.0, tolerance, (t[k],),
                       notes=(f"norm={Norm(norm).value}",))


def check_theorem1(
        tm: t1.TransportMap1D,
        p: float,
        q: float,
        c_p: float,
        c_q: float,
        pairs: PairSpec = PairSpec(),
        seed=0,
        tolerance: float = 1e-3,
        check_id: str = "theorem1",
) -> VerificationReport:
    """sup |T(x) - T(y)| / |x - y|^alpha over the quantile band against the constant from the gradient moduli"""
    constant, alpha = t1.theorem1_constant(p, q, c_p, c_q)
    found = t1.empirical_holder_1d(tm, alpha, pairs, _rng(seed, check_id))
    anchor = "|T(x) - T(y)| <= ((q+1) C_p / ((p+1) C_q))^(1/(q+1)) |x - y|^((p+1)/(q+1))"
    notes = (f"C_p={c_p:.6g} p={p:.6g} C_q={c_q:.6g} q={q:.6g} alpha={alpha:.6g}", "witness: x, y")
    return make_report(check_id, anchor, constant, found.value, 1.0, tolerance, found.point, _seed_of(seed), notes)


def check_envelope_oracle(p: float, a: float, tolerance: float = 1e-6, n_nodes: int = 2001,
                          check_id: Optional[str] = None) -> VerificationReport:
    """
        Largest gap between the closed form of f_{p,a} and the shooting solution on |t| <= 0.99 a,
        together with the gap of f(0).
        :raises ShootingError:
    """
    check_id = f"envelope_oracle_p{p:g}" if check_id is None else check_id
    oracle = envelope_ode_oracle(p, a, n_nodes)
    env = make_envelope(p, a)
    inner = np.abs(oracle.t) <= 0.99 * a
    gaps = np.abs(np.asarray(envelope_eval(env, oracle.t[inner])) - oracle.f[inner])
    k = int(np.argmax(gaps))
    f0_gap = abs(env.f0 - oracle.f0)
    notes = (f"p={p:.6g} a={a:.6g}", f"f(0) closed {env.f0:.12g} shooting {oracle.f0:.12g}")
    anchor = "closed-form f_{p,a} agrees with the solution of f f'' + p f'^2 = -1, f(+-a) = 0"
    return make_report(check_id, anchor, 0.0, max(float(gaps[k]), f0_gap), 1.0, tolerance,
                       (oracle.t[inner][k],), notes=notes)


def check_g_pushforward(a: float, count: int = 100_000, seed=0, tolerance: float = 0.01,
                        check_id: str = "g_pushforward") -> VerificationReport:
    """
        Kolmogorov-Smirnov distance between G(U) for U uniform on (-a, a) and the standard Gaussian.
        G(+-a) is infinite, so the truncation level b = G(a) leaves the Gaussian untruncated.
    """
    rng = _rng(seed, check_id)
    u = a * (2.0 * rng.random(count) - 1.0)
    u = u[np.abs(u) < a]
    result = stats.kstest(np.asarray(g_map(a, u), dtype=float), "norm")
    notes = (f"a={a:.6g} samples={len(u)}", f"p-value {float(result.pvalue):.4g}")
    return make_report(check_id, "G pushes Uniform[-a, a] forward to the standard Gaussian", 0.0,
                       float(result.statistic), 1.0, tolerance, (float(result.statistic_location),),
                       _seed_of(seed), notes)
