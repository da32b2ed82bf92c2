"""
    The bound functions f_{p,a}: even solutions of f f'' + p (f')^2 = -1 with f(a) = 0.

    Closed forms. With k = 1/p for p > 0 and k = -1 - 1/p for p < 0:

        a sqrt(|p|) = f(0) * S(k),    S(k) = integral of sin^k over [0, pi/2]
        f(t) = f(0) * (1 - Binv(|t| / a))^(1 / (2|p|))

    where Binv is the inverse of the regularized incomplete beta function I(1/2, (k+1)/2).
    This is the substitution r = sin(theta) (p > 0) or r = 1/sin(theta) (p < 0) applied
    to the Psi integrals. For p = 0, f(t) = f(0) * Phi^{-1}(sqrt(pi/2) - |t| / f(0)) with
    Phi(x) = integral of ds / sqrt(-2 log s) over [0, x] and f(0) = a sqrt(2/pi).

    The closed forms are checked against a shooting solution of the boundary value problem.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.optimize import brentq

from brenierlab.common._guards import on_outside_interval, on_non_positive, on_envelope_exponent
from brenierlab.common.exceptions import DomainError, EnvelopeDomainError, ParameterRangeError, ShootingError
from brenierlab.measures import Potential


__all__ = [
    "EnvelopeFunction",
    "OracleTable",
    "sine_power_integral",
    "psi",
    "psi_inverse",
    "f0_from_a",
    "make_envelope",
    "envelope_eval",
    "envelope_derivative",
    "envelope_second_derivative",
    "envelope_ode_oracle",
    "phi_special",
    "phi_special_inverse",
    "g_map",
    "caffarelli_refinement_bound",
    "measure_set_bound",
    "measure_set_product_bound",
    "condition_margin",
    "envelope_condition_margin",
]


logger = logging.getLogger(__name__)

_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


def sine_power_integral(k: float) -> float:
    """Integral of sin(x)^k over [0, pi/2], k > -1"""
    if not k > -1:
        raise ParameterRangeError("k", k, "k > -1")
    value, _ = integrate.quad(lambda x: math.sin(x) ** k, 0.0, math.pi / 2, epsabs=0.0, epsrel=1e-13, limit=200)
    return value


def _sine_exponent(p: float) -> float:
    return 1.0 / p if p > 0 else -1.0 - 1.0 / p


def psi(t: float, p: float) -> float:
    """
        Psi(t) = int_t^1 r^(1/p) / sqrt(1 - r^2) dr for p > 0, t in [0, 1];
        Psi(t) = int_1^t r^(1/p) / sqrt(r^2 - 1) dr for p < 0, t in [1, inf).
        Computed as an integral of sin^k over [arcsin(t or 1/t), pi/2], free of endpoint singularities.
        :raises DomainError:
    """
    on_envelope_exponent(p)
    if p == 0:
        raise DomainError("p", p, "p != 0")
    k = _sine_exponent(p)
    if p > 0:
        on_outside_interval("t", t, 0.0, 1.0)
        lower = math.asin(t)
    else:
        on_outside_interval("t", t, 1.0, math.inf)
        lower = 0.0 if math.isinf(t) else math.asin(1.0 / t)
    value, _ = integrate.quad(lambda x: math.sin(x) ** k, lower, math.pi / 2, epsabs=1e-15, epsrel=1e-13, limit=200)
    return value


def psi_inverse(s: float, p: float) -> float:
    """
        The t with psi(t, p) = s, from the incomplete beta inverse.
        :raises DomainError: s outside [0, S(k)]
    """
    on_envelope_exponent(p)
    if p == 0:
        raise DomainError("p", p, "p != 0")
    k = _sine_exponent(p)
    total = 0.5 * special.beta(0.5, 0.5 * (k + 1.0))
    on_outside_interval("s", s, 0.0, total * (1.0 + 1e-14))
    cos2 = float(special.betaincinv(0.5, 0.5 * (k + 1.0), min(s / total, 1.0)))
    if p > 0:
        return math.sqrt(max(1.0 - cos2, 0.0))
    return math.inf if cos2 >= 1.0 else 1.0 / math.sqrt(1.0 - cos2)


def f0_from_a(a: float, p: float) -> float:
    """
        f(0) for the half-width a.
        :raises ParameterRangeError: p <= -1 or a <= 0
    """
    on_envelope_exponent(p)
    on_non_positive("a", a)
    if p == 0:
        return a * math.sqrt(2.0 / math.pi)
    return a * math.sqrt(abs(p)) / sine_power_integral(_sine_exponent(p))


@dataclass(frozen=True, slots=True, repr=True)
class EnvelopeFunction:
    p: float
    a: float
    f0: float

    def table(self, count: int = 201) -> np.ndarray:
        """Rows (t, f(t), -f'(t)) on [-a, a]"""
        t = np.linspace(-self.a, self.a, count)
        return np.column_stack([t, envelope_eval(self, t), envelope_derivative(self, t)])


def make_envelope(p: float, a: float) -> EnvelopeFunction:
    return EnvelopeFunction(p=float(p), a=float(a), f0=f0_from_a(a, p))


def _scaled_argument(env: EnvelopeFunction, t) -> np.ndarray:
    t = np.abs(np.asarray(t, dtype=float))
    if np.any(t > env.a * (1.0 + 1e-12)):
        raise EnvelopeDomainError(float(np.max(t)), env.a)
    return np.minimum(t / env.a, 1.0)


def envelope_eval(env: EnvelopeFunction, t):
    """
        f_{p,a}(t), vectorized; even in t by construction.
        :raises EnvelopeDomainError: |t| > a
    """
    x = _scaled_argument(env, t)
    if env.p == 0:
        u = special.ndtri(0.5 * (1.0 - x))
        value = env.f0 * np.exp(-0.5 * u ** 2)
        value = np.where(x >= 1.0, 0.0, value)
    else:
        k = _sine_exponent(env.p)
        cos2 = special.betaincinv(0.5, 0.5 * (k + 1.0), x)
        value = env.f0 * np.maximum(1.0 - cos2, 0.0) ** (1.0 / (2.0 * abs(env.p)))
    return float(value) if np.ndim(value) == 0 else value


def envelope_derivative(env: EnvelopeFunction, t):
    """
        -f'(t) from the first integral (f')^2 = ((f0/f)^(2p) - 1)/p, or 2 log(f0/f) at p = 0.
        Odd in t; infinite at t = +-a when p >= 0.
        :raises EnvelopeDomainError: |t| > a
    """
    sign = np.sign(np.asarray(t, dtype=float))
    f = np.asarray(envelope_eval(env, t), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(f > 0, env.f0 / f, np.inf)
        if env.p == 0:
            square = 2.0 * np.log(ratio)
        elif env.p > 0:
            square = np.expm1(2.0 * env.p * np.log(ratio)) / env.p
        else:
            square = -np.expm1(2.0 * env.p * np.log(ratio)) / -env.p
    value = sign * np.sqrt(np.maximum(square, 0.0))
    return float(value) if np.ndim(value) == 0 else value


def envelope_second_derivative(env: EnvelopeFunction, t):
    """f'' = -(1 + p (f')^2) / f on the open interval (-a, a)"""
    f = np.asarray(envelope_eval(env, t), dtype=float)
    slope = np.asarray(envelope_derivative(env, t), dtype=float)
    value = -(1.0 + env.p * slope ** 2) / f
    return float(value) if np.ndim(value) == 0 else value


# ---------------------------------------------------------------- boundary value oracle

@dataclass(frozen=True, slots=True, repr=False, eq=False)
class OracleTable:
    """Shooting solution tabulated on [-a, a]"""
    p: float
    a: float
    f0: float
    t: np.ndarray
    f: np.ndarray

    def __repr__(self) -> str:
        return f"OracleTable(p={self.p}, a={self.a}, f0={self.f0}, nodes={len(self.t)})"


def _stop_level(p: float) -> float:
    """Relative level of f where the integration stops and the remaining distance is extrapolated"""
    return 10.0 ** (-12.0 / (1.0 + p)) if p > 0 else 1e-12


def _shoot(p: float, f0: float, dense: bool = False):
    def rhs(_, state):
        f, df = state
        return [df, -(1.0 + p * df * df) / f]

    level = _stop_level(p) * f0

    def reaches_floor(_, state):
        return state[0] - level

    reaches_floor.terminal = True
    reaches_floor.direction = -1
    solution = integrate.solve_ivp(rhs, (0.0, 20.0 * f0), [f0, 0.0], method="DOP853", rtol=1e-12, atol=1e-14 * f0,
                                   events=reaches_floor, dense_output=dense)
    if solution.status != 1 or len(solution.t_events[0]) == 0:
        return math.inf, solution
    t_hit = float(solution.t_events[0][0])
    f_hit, df_hit = solution.y_events[0][0]
    return t_hit + f_hit / abs(df_hit), solution


def envelope_ode_oracle(p: float, a: float, n_nodes: int = 2001) -> OracleTable:
    """
        Solves f f'' + p (f')^2 = -1, f'(0) = 0, f(a) = 0 by shooting on f(0).
        The zero of f is located from the integrator's terminal event and adjusted by Brent's method.
        :raises ShootingError: the zero can not be bracketed
    """
    on_envelope_exponent(p)
    on_non_positive("a", a)
    lo, hi = 1e-2 * a, 1e2 * a

    def miss(f0: float) -> float:
        zero, _ = _shoot(p, f0)
        return zero - a

    miss_lo, miss_hi = miss(lo), miss(hi)
    if not (miss_lo < 0 < miss_hi):
        raise ShootingError(p, a, (lo, hi))
    f0 = brentq(miss, lo, hi, xtol=1e-15 * a, rtol=4 * np.finfo(float).eps, maxiter=200)
    logger.debug("shooting p=%s a=%s: f(0) = %.15f", p, a, f0)
    zero, solution = _shoot(p, f0, dense=True)
    t_hit = float(solution.t[-1])
    t = np.linspace(-a, a, n_nodes)
    r = np.abs(t)
    inside = r <= t_hit
    values = np.empty_like(t)
    values[inside] = solution.sol(r[inside])[0]
    f_hit = float(solution.y[0, -1])
    values[~inside] = f_hit * np.clip((zero - r[~inside]) / max(zero - t_hit, 1e-300), 0.0, 1.0)
    return OracleTable(p=float(p), a=float(a), f0=float(f0), t=t, f=values)


# ---------------------------------------------------------------- the p = 0 case

def phi_special(x: float) -> float:
    """
        Phi(x) = int_0^x ds / sqrt(-2 log s) on [0, 1], as the Gaussian tail integral
        int_{sqrt(-2 log x)}^inf exp(-u^2/2) du after s = exp(-u^2/2).
        :raises DomainError:
    """
    on_outside_interval("x", x, 0.0, 1.0)
    if x == 0:
        return 0.0
    lower = math.sqrt(max(-2.0 * math.log(x), 0.0))
    value, _ = integrate.quad(lambda u: math.exp(-0.5 * u * u), lower, math.inf, epsabs=1e-15, epsrel=1e-13)
    return value


def phi_special_inverse(s: float) -> float:
    """
        Inverse of phi_special on [0, sqrt(pi/2)] through the Gaussian quantile.
        :raises DomainError:
    """
    on_outside_interval("s", s, 0.0, _SQRT_HALF_PI * (1.0 + 1e-14))
    u = -special.ndtri(min(s / math.sqrt(2.0 * math.pi), 0.5))
    return math.exp(-0.5 * u * u)


def g_map(a: float, x):
    """
        G(x) = int_0^x ds / f_{0,a}(s) = -f'_{0,a}(x). It pushes Uniform[-a, a] forward to the
        standard Gaussian, so G(+-a) = +-inf.
        :raises EnvelopeDomainError: |x| > a
    """
    return envelope_derivative(make_envelope(0.0, a), x)


# ---------------------------------------------------------------- explicit constants

def caffarelli_refinement_bound(k_lower: float) -> float:
    """
        Upper bound 1/sqrt(K) for phi'' when the target potential has W'' >= K.
        :raises ParameterRangeError:
    """
    on_non_positive("K", k_lower)
    return 1.0 / math.sqrt(k_lower)


def measure_set_bound(d: int, diam: float) -> float:
    """
        Operator norm bound for D^2 phi, Gaussian source and uniform target on a body of diameter diam.
        :raises ParameterRangeError: d < 2 or diam <= 0
    """
    if d < 2:
        raise ParameterRangeError("d", d, "d >= 2")
    on_non_positive("diam", diam)
    return math.sqrt(d - 1) * diam / (4.0 * sine_power_integral(4.0 / (d - 1)))


def measure_set_product_bound(d: int, diam: float, p: float) -> float:
    """
        The dimension-free variant for product sources with |V'| <= 1 and V'' <= 1, -1 < p < 0.
        :raises ParameterRangeError:
    """
    if d < 2:
        raise ParameterRangeError("d", d, "d >= 2")
    on_non_positive("diam", diam)
    if not -1 < p < 0:
        raise ParameterRangeError("p", p, "-1 < p < 0")
    factor = math.sqrt(-p * (1.0 + d / (4.0 * (1.0 + p))))
    return factor * diam / (2.0 * sine_power_integral(-1.0 - 1.0 / p))


# ---------------------------------------------------------------- one-dimensional maximum principle

def condition_margin(target: Potential, t, f, df, d2f) -> np.ndarray:
    """
        f^2 times (-f''/f + W'' + W' f'/f - 1/f^2) at the points t; nonnegative values mean the
        condition under which phi'' <= f(phi') for a Gaussian source holds there.
    """
    t = np.asarray(t, dtype=float).reshape(-1, 1)
    step = 1e-5
    gradient = target.family.gradient
    w1 = gradient(t)[:, 0]
    w2 = (gradient(t + step) - gradient(t - step))[:, 0] / (2.0 * step)
    f, df, d2f = (np.broadcast_to(np.asarray(v, dtype=float), w1.shape) for v in (f, df, d2f))
    return -f * d2f + w2 * f ** 2 + w1 * f * df - 1.0


def envelope_condition_margin(env: EnvelopeFunction, target: Potential, t) -> np.ndarray:
    """condition_margin for f = f_{p,a} at interior points t"""
    f = envelope_eval(env, t)
    df = -np.asarray(envelope_derivative(env, t))
    d2f = envelope_second_derivative(env, t)
    return condition_margin(target, t, f, df, d2f)
