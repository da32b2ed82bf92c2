"""
    Log-concave measures e^{-V}dx and uniform measures on convex bodies.

    A measure is described by a family object (parameters only) and wrapped into a Potential
    that carries the log-normalizer, so that e^{-V} is a probability density.
    The module also computes the convexity moduli of a potential:

        delta(t) = inf{ V(x+y) + V(x-y) - 2V(x) : ||y|| >= t }
        b(t)     = inf{ V(x+y) - V(x) - <grad V(x), y> : ||y|| >= t }

    together with the convex minorant of b and its Legendre conjugate.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Union, TypeAlias

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq, linprog, minimize_scalar
from scipy.spatial import ConvexHull, HalfspaceIntersection

from brenierlab.common._guards import on_dimension_mismatch, on_outside_interval, on_non_positive, on_empty
from brenierlab.common.exceptions import (
    DomainError,
    ParameterRangeError,
    NotMonotoneError,
    NotConvexError,
    RejectionError,
    UnboundedBodyError,
)
from brenierlab.search import Norm, SearchSpec, Extremum, grid_infimum, dual_norm_of, halton_points


__all__ = [
    "Box",
    "Ball",
    "Polytope",
    "ConvexBody",
    "Gaussian",
    "PowerLaw",
    "HuberProduct",
    "ConvexPolynomial",
    "UniformBody",
    "Family",
    "Potential",
    "ModulusKind",
    "ConvexityModulus",
    "make_potential",
    "eval_potential",
    "grad_potential",
    "density",
    "second_quotient",
    "bregman_divergence",
    "cdf_1d",
    "quantile_1d",
    "support_1d",
    "sample",
    "sample_body",
    "curvature_bounds",
    "modulus_delta",
    "modulus_bregman",
    "modulus_grid",
    "tabulate_modulus",
    "modulus_from_values",
    "convexify_modulus",
    "conjugate_modulus",
    "second_difference_constant",
    "holder_gradient_constant",
    "convexity_gradient_constant",
]


logger = logging.getLogger(__name__)

_QUAD_RTOL = 1e-10
_TAIL_ENERGY = 60.0


# ---------------------------------------------------------------- convex bodies

@dataclass(frozen=True, slots=True, repr=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]


@dataclass(frozen=True, slots=True, repr=True)
class Ball:
    center: tuple[float, ...]
    radius: float


@dataclass(frozen=True, slots=True, repr=True)
class Polytope:
    """Intersection of halfspaces <normal, y> <= offset"""
    normals: tuple[tuple[float, ...], ...]
    offsets: tuple[float, ...]


Shape: TypeAlias = Union[Box, Ball, Polytope]


@dataclass(frozen=True, slots=True, repr=True)
class ConvexBody:
    shape: Shape
    dimension: int

    def __post_init__(self):
        on_non_positive("dimension", self.dimension)
        match self.shape:
            case Box(lo=lo, hi=hi):
                if len(lo) != self.dimension or len(hi) != self.dimension:
                    raise ParameterRangeError("box", self.shape, f"{self.dimension} bounds per side")
                if any(a >= b for a, b in zip(lo, hi)):
                    raise ParameterRangeError("box", self.shape, "lo < hi on every axis")
            case Ball(center=center, radius=radius):
                if len(center) != self.dimension:
                    raise ParameterRangeError("ball", self.shape, f"a center with {self.dimension} coordinates")
                on_non_positive("radius", radius)
            case Polytope():
                _, inradius = _chebyshev_center(self.shape)
                if inradius <= 1e-12:
                    raise ParameterRangeError("polytope", self.shape, "a nonempty interior")
                for axis in np.eye(self.dimension):
                    self.support(axis)
                    self.support(-axis)

    @staticmethod
    def box(lo: float, hi: float, dimension: int) -> 'ConvexBody':
        return ConvexBody(Box((float(lo),) * dimension, (float(hi),) * dimension), dimension)

    @staticmethod
    def ball(radius: float, dimension: int, center: Optional[tuple[float, ...]] = None) -> 'ConvexBody':
        center = center if center is not None else (0.0,) * dimension
        return ConvexBody(Ball(tuple(float(c) for c in center), float(radius)), dimension)

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(on_dimension_mismatch(x, self.dimension))
        match self.shape:
            case Box(lo=lo, hi=hi):
                return np.all((x >= np.asarray(lo)) & (x <= np.asarray(hi)), axis=1)
            case Ball(center=center, radius=radius):
                return np.linalg.norm(x - np.asarray(center), axis=1) <= radius
            case Polytope(normals=normals, offsets=offsets):
                return np.all(x @ np.asarray(normals).T <= np.asarray(offsets) + 1e-12, axis=1)

    def support(self, h) -> tuple[float, float]:
        """
           (min, max) of <y, h> over the body.
           :raises UnboundedBodyError:
        """
        h = np.asarray(h, dtype=float).reshape(-1)
        match self.shape:
            case Box(lo=lo, hi=hi):
                lo, hi = np.asarray(lo), np.asarray(hi)
                return float(np.sum(np.minimum(lo * h, hi * h))), float(np.sum(np.maximum(lo * h, hi * h)))
            case Ball(center=center, radius=radius):
                c = float(np.dot(center, h))
                r = radius * float(np.linalg.norm(h))
                return c - r, c + r
            case Polytope(normals=normals, offsets=offsets):
                bounds = [(None, None)] * self.dimension
                values = list()
                for sign in (1.0, -1.0):
                    res = linprog(-sign * h, A_ub=np.asarray(normals), b_ub=np.asarray(offsets),
                                  bounds=bounds, method="highs")
                    if res.status == 3:
                        raise UnboundedBodyError(sign * h)
                    values.append(-res.fun * sign)
                return values[1], values[0]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        axes = np.eye(self.dimension)
        spans = [self.support(axis) for axis in axes]
        return np.array([s[0] for s in spans]), np.array([s[1] for s in spans])

    def volume(self) -> float:
        match self.shape:
            case Box(lo=lo, hi=hi):
                return float(np.prod(np.asarray(hi) - np.asarray(lo)))
            case Ball(radius=radius):
                d = self.dimension
                return float(math.pi ** (d / 2) * radius ** d / math.gamma(d / 2 + 1))
            case Polytope():
                vertices = _polytope_vertices(self.shape)
                if self.dimension == 1:
                    return float(vertices.max() - vertices.min())
                return float(ConvexHull(vertices).volume)

    def diameter(self) -> float:
        match self.shape:
            case Box(lo=lo, hi=hi):
                return float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))
            case Ball(radius=radius):
                return 2.0 * radius
            case Polytope():
                v = _polytope_vertices(self.shape)
                return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)))


def _chebyshev_center(shape: Polytope) -> tuple[np.ndarray, float]:
    a = np.asarray(shape.normals, dtype=float)
    b = np.asarray(shape.offsets, dtype=float)
    d = a.shape[1]
    norms = np.linalg.norm(a, axis=1)
    cost = np.zeros(d + 1)
    cost[-1] = -1.0
    res = linprog(cost, A_ub=np.column_stack([a, norms]), b_ub=b,
                  bounds=[(None, None)] * d + [(0, None)], method="highs")
    if res.status != 0:
        return np.zeros(d), 0.0
    return res.x[:d], float(res.x[-1])


def _polytope_vertices(shape: Polytope) -> np.ndarray:
    a = np.asarray(shape.normals, dtype=float)
    b = np.asarray(shape.offsets, dtype=float)
    center, _ = _chebyshev_center(shape)
    if a.shape[1] == 1:
        upper = min(b[i] / a[i, 0] for i in range(len(b)) if a[i, 0] > 0)
        lower = max(b[i] / a[i, 0] for i in range(len(b)) if a[i, 0] < 0)
        return np.array([[lower], [upper]])
    return HalfspaceIntersection(np.column_stack([a, -b]), center).intersections


# ---------------------------------------------------------------- families

@dataclass(frozen=True, slots=True, repr=True)
class Gaussian:
    """V = |x - mean|^2 / (2 variance)"""
    dimension: int = 1
    mean: tuple[float, ...] = ()
    variance: float = 1.0

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float) if self.mean else np.zeros(self.dimension)

    def energy(self, x: np.ndarray) -> np.ndarray:
        return np.sum((x - self.center) ** 2, axis=-1) / (2.0 * self.variance)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return (x - self.center) / self.variance


@dataclass(frozen=True, slots=True, repr=True)
class PowerLaw:
    """V = |x|^beta with the Euclidean norm"""
    dimension: int = 1
    beta: float = 4.0

    def energy(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(x, axis=-1) ** self.beta

    def gradient(self, x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = self.beta * np.where(r > 0, r ** (self.beta - 2.0), 0.0) * x
        return np.nan_to_num(g)


@dataclass(frozen=True, slots=True, repr=True)
class HuberProduct:
    """V = sum of V1(x_i), V1(s) = s^2/2 for |s| <= 1 and |s| - 1/2 otherwise"""
    dimension: int = 1

    def energy(self, x: np.ndarray) -> np.ndarray:
        a = np.abs(x)
        return np.sum(np.where(a <= 1.0, 0.5 * x ** 2, a - 0.5), axis=-1)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, -1.0, 1.0)


@dataclass(frozen=True, slots=True, repr=True)
class ConvexPolynomial:
    """V = x^T A x / 2 + c |x|^4 + <l, x>"""
    dimension: int = 1
    quadratic: tuple[tuple[float, ...], ...] = ((1.0,),)
    quartic: float = 0.0
    linear: tuple[float, ...] = ()

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.quadratic, dtype=float)

    @property
    def shift(self) -> np.ndarray:
        return np.asarray(self.linear, dtype=float) if self.linear else np.zeros(self.dimension)

    def energy(self, x: np.ndarray) -> np.ndarray:
        quad = 0.5 * np.einsum("...i,ij,...j->...", x, self.matrix, x)
        return quad + self.quartic * np.sum(x ** 2, axis=-1) ** 2 + x @ self.shift

    def gradient(self, x: np.ndarray) -> np.ndarray:
        r2 = np.sum(x ** 2, axis=-1, keepdims=True)
        return x @ self.matrix.T + 4.0 * self.quartic * r2 * x + self.shift


@dataclass(frozen=True, slots=True, repr=True)
class UniformBody:
    """V = log vol(body) inside the body and +inf outside"""
    body: ConvexBody

    @property
    def dimension(self) -> int:
        return self.body.dimension

    def energy(self, x: np.ndarray) -> np.ndarray:
        return np.where(self.body.contains(x), 0.0, np.inf)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(x)


Family: TypeAlias = Union[Gaussian, PowerLaw, HuberProduct, ConvexPolynomial, UniformBody]


class _NumericCdf:
    """
        CDF of a 1D log-concave density as a cubic Hermite spline of the cumulative mass,
        with the exact density as node slopes. Quantiles by Newton iterations on the spline.
    """
    __slots__ = ("lo", "hi", "spline", "slope")

    def __init__(self, energy, lo: float, hi: float, nodes: int = 4097):
        xs = np.linspace(lo, hi, nodes)
        shift = float(np.min(energy(xs[:, None])))

        def unnormalized(s: float) -> float:
            return math.exp(-(float(energy(np.array([[s]]))[0]) - shift))

        pieces = [integrate.quad(unnormalized, a, b, epsabs=0.0, epsrel=1e-13)[0] for a, b in zip(xs[:-1], xs[1:])]
        mass = np.concatenate([[0.0], np.cumsum(pieces)])
        total = mass[-1]
        dens = np.exp(-(energy(xs[:, None]) - shift)) / total
        self.lo, self.hi = lo, hi
        self.spline = CubicHermiteSpline(xs, mass / total, dens)
        self.slope = self.spline.derivative()

    def cdf(self, x: np.ndarray) -> np.ndarray:
        inside = np.clip(x, self.lo, self.hi)
        return np.clip(self.spline(inside), 0.0, 1.0)

    def quantile(self, u: np.ndarray) -> np.ndarray:
        grid = self.spline.x
        table = self.spline(grid)
        x = np.interp(u, table, grid)
        for _ in range(60):
            step = (self.spline(x) - u) / np.maximum(self.slope(x), 1e-300)
            x = np.clip(x - step, self.lo, self.hi)
            if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(x))):
                break
        return x


@dataclass(frozen=True, slots=True, repr=True)
class Potential:
    family: Family
    dimension: int
    log_normalizer: float
    numeric_cdf: Optional[_NumericCdf] = field(default=None, repr=False, compare=False)


def _quad_1d(fn, lo=-np.inf, hi=np.inf, points=None) -> float:
    if points is not None:
        edges = [lo, *points, hi]
        return sum(integrate.quad(fn, a, b, epsabs=0.0, epsrel=_QUAD_RTOL, limit=200)[0]
                   for a, b in zip(edges[:-1], edges[1:]))
    return integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=_QUAD_RTOL, limit=200)[0]


def _huber_mass() -> float:
    return _quad_1d(lambda s: math.exp(-(0.5 * s * s if abs(s) <= 1 else abs(s) - 0.5)), points=[-1.0, 0.0, 1.0])


def _tail_interval(energy_1d) -> tuple[float, float]:
    """Interval outside which the (convex) energy exceeds its minimum by the tail margin"""
    found = minimize_scalar(energy_1d)
    x0, e0 = float(found.x), float(found.fun)

    def excess(s: float) -> float:
        return energy_1d(s) - e0 - _TAIL_ENERGY

    bounds = list()
    for sign in (-1.0, 1.0):
        step = 1.0
        while excess(x0 + sign * step) < 0:
            step *= 2.0
        bounds.append(brentq(excess, x0, x0 + sign * step) if sign > 0 else brentq(excess, x0 - step, x0))
    return bounds[0], bounds[1]


def _log_normalizer(family: Family) -> float:
    match family:
        case Gaussian(dimension=d, variance=var):
            one = _quad_1d(lambda s: math.exp(-s * s / (2.0 * var)), points=[0.0])
            return d * math.log(one)
        case PowerLaw(dimension=1, beta=beta):
            return math.log(_quad_1d(lambda s: math.exp(-abs(s) ** beta), points=[0.0]))
        case PowerLaw(dimension=d, beta=beta):
            radial = _quad_1d(lambda r: r ** (d - 1) * math.exp(-r ** beta), lo=0.0)
            log_sphere = math.log(2.0) + 0.5 * d * math.log(math.pi) - special.gammaln(0.5 * d)
            return log_sphere + math.log(radial)
        case HuberProduct(dimension=d):
            return d * math.log(_huber_mass())
        case ConvexPolynomial(dimension=d):
            return _polynomial_log_normalizer(family, d)
        case UniformBody(body=body):
            return math.log(body.volume())
    raise ParameterRangeError("family", family, "a known measure family")


def _polynomial_log_normalizer(family: ConvexPolynomial, d: int) -> float:
    def energy(*coords) -> float:
        return float(family.energy(np.array([coords]))[0])

    if d == 1:
        lo, hi = _tail_interval(lambda s: energy(s))
        shift = float(minimize_scalar(lambda s: energy(s)).fun)
        return shift + math.log(_quad_1d(lambda s: math.exp(-(energy(s) - shift)), lo, hi))
    shift = float(np.min(family.energy(np.zeros((1, d)))))
    if d == 2:
        value, _ = integrate.dblquad(lambda y, x: math.exp(-(energy(x, y) - shift)),
                                     -np.inf, np.inf, -np.inf, np.inf, epsabs=0.0, epsrel=1e-9)
    else:
        value, _ = integrate.tplquad(lambda z, y, x: math.exp(-(energy(x, y, z) - shift)),
                                     -np.inf, np.inf, -np.inf, np.inf, -np.inf, np.inf, epsabs=0.0, epsrel=1e-8)
    return shift + math.log(value)


def _check_family(family: Family):
    on_non_positive("dimension", family.dimension)
    match family:
        case Gaussian(dimension=d, mean=mean, variance=var):
            on_non_positive("variance", var)
            if mean and len(mean) != d:
                raise ParameterRangeError("mean", mean, f"{d} coordinates")
        case PowerLaw(beta=beta):
            if beta < 1:
                raise ParameterRangeError("beta", beta, "beta >= 1 (convex potential)")
        case ConvexPolynomial(dimension=d, quartic=c):
            a = family.matrix
            if a.shape != (d, d) or not np.allclose(a, a.T):
                raise ParameterRangeError("quadratic", family.quadratic, f"a symmetric {d}x{d} matrix")
            smallest = float(np.min(np.linalg.eigvalsh(a)))
            if smallest < -1e-12 or c < 0:
                raise ParameterRangeError("quadratic", family.quadratic, "a positive semidefinite matrix and c >= 0")
            if smallest <= 1e-12 and c == 0:
                raise ParameterRangeError("quartic", c, "c > 0 when the matrix is singular")
            if family.linear and len(family.linear) != d:
                raise ParameterRangeError("linear", family.linear, f"{d} coordinates")


def make_potential(family: Family) -> Potential:
    """
        Wraps a family into a normalized potential.
        :raises ParameterRangeError: invalid family parameters
    """
    _check_family(family)
    log_z = _log_normalizer(family)
    numeric = None
    if isinstance(family, ConvexPolynomial) and family.dimension == 1:
        lo, hi = _tail_interval(lambda s: float(family.energy(np.array([[s]]))[0]))
        numeric = _NumericCdf(family.energy, lo, hi)
    logger.debug("potential %s: log normalizer %.12f", family, log_z)
    return Potential(family=family, dimension=family.dimension, log_normalizer=log_z, numeric_cdf=numeric)


# ---------------------------------------------------------------- evaluation

def eval_potential(pot: Potential, x) -> Union[float, np.ndarray]:
    """
        V(x) including the log-normalizer. A single point gives a float, rows give an array.
        :raises DimensionMismatchError:
    """
    arr = on_dimension_mismatch(x, pot.dimension)
    values = pot.family.energy(np.atleast_2d(arr)) + pot.log_normalizer
    return float(values[0]) if arr.ndim == 1 else values


def grad_potential(pot: Potential, x) -> np.ndarray:
    """:raises DimensionMismatchError:"""
    arr = on_dimension_mismatch(x, pot.dimension)
    g = pot.family.gradient(np.atleast_2d(arr))
    return g[0] if arr.ndim == 1 else g


def density(pot: Potential, x) -> Union[float, np.ndarray]:
    return np.exp(-np.asarray(eval_potential(pot, x)))


def second_quotient(pot: Potential, x, y) -> Union[float, np.ndarray]:
    """
        V(x+y) + V(x-y) - 2V(x). The normalizer cancels.
        :raises DimensionMismatchError:
    """
    x = on_dimension_mismatch(x, pot.dimension)
    y = on_dimension_mismatch(y, pot.dimension)
    single = x.ndim == 1 and y.ndim == 1
    x2, y2 = np.atleast_2d(x), np.atleast_2d(y)
    energy = pot.family.energy
    values = energy(x2 + y2) + energy(x2 - y2) - 2.0 * energy(x2)
    return float(values[0]) if single else values


def bregman_divergence(pot: Potential, x, y) -> Union[float, np.ndarray]:
    """V(x+y) - V(x) - <grad V(x), y>"""
    x = on_dimension_mismatch(x, pot.dimension)
    y = on_dimension_mismatch(y, pot.dimension)
    single = x.ndim == 1 and y.ndim == 1
    x2, y2 = np.atleast_2d(x), np.atleast_2d(y)
    energy = pot.family.energy
    values = energy(x2 + y2) - energy(x2) - np.sum(pot.family.gradient(x2) * y2, axis=-1)
    return float(values[0]) if single else values


# ---------------------------------------------------------------- one-dimensional distribution functions

def _on_one_dimensional(pot: Potential):
    if pot.dimension != 1:
        raise DomainError("dimension", pot.dimension, "{1}")


def support_1d(pot: Potential) -> tuple[float, float]:
    _on_one_dimensional(pot)
    if isinstance(pot.family, UniformBody):
        lo, hi = pot.family.body.bounding_box()
        return float(lo[0]), float(hi[0])
    return -math.inf, math.inf


def cdf_1d(pot: Potential, x):
    """
        F(x) for a one-dimensional potential, vectorized over x.
        :raises DomainError: the potential is not one-dimensional
    """
    _on_one_dimensional(pot)
    x = np.asarray(x, dtype=float)
    match pot.family:
        case Gaussian(variance=var):
            return special.ndtr((x - pot.family.center[0]) / math.sqrt(var))
        case PowerLaw(beta=beta):
            half = 0.5 * special.gammainc(1.0 / beta, np.abs(x) ** beta)
            return np.where(x >= 0, 0.5 + half, 0.5 - half)
        case HuberProduct():
            z = math.exp(pot.log_normalizer)
            left = np.exp(np.minimum(x, -1.0) + 0.5)
            middle = math.exp(-0.5) + math.sqrt(2 * math.pi) * (special.ndtr(np.clip(x, -1, 1)) - special.ndtr(-1.0))
            right = z - np.exp(0.5 - np.maximum(x, 1.0))
            return np.where(x < -1, left, np.where(x <= 1, middle, right)) / z
        case ConvexPolynomial():
            return pot.numeric_cdf.cdf(x)
        case UniformBody():
            lo, hi = support_1d(pot)
            return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def quantile_1d(pot: Potential, u):
    """
        F^{-1}(u), vectorized over u.
        :raises DomainError: u outside (0, 1) or the potential is not one-dimensional
    """
    _on_one_dimensional(pot)
    on_outside_interval("u", u, 0.0, 1.0, closed=False)
    u = np.asarray(u, dtype=float)
    match pot.family:
        case Gaussian(variance=var):
            return pot.family.center[0] + math.sqrt(var) * special.ndtri(u)
        case PowerLaw(beta=beta):
            r = special.gammaincinv(1.0 / beta, np.abs(2.0 * u - 1.0)) ** (1.0 / beta)
            return np.where(u >= 0.5, r, -r)
        case HuberProduct():
            z = math.exp(pot.log_normalizer)
            mass = u * z
            knee = math.exp(-0.5)
            left = np.log(np.maximum(mass, 1e-300)) - 0.5
            inner = special.ndtr(-1.0) + (mass - knee) / math.sqrt(2 * math.pi)
            middle = special.ndtri(np.clip(inner, 1e-300, 1 - 1e-16))
            right = 0.5 - np.log(np.maximum(z - mass, 1e-300))
            return np.where(mass < knee, left, np.where(mass <= z - knee, middle, right))
        case ConvexPolynomial():
            return pot.numeric_cdf.quantile(u)
        case UniformBody():
            lo, hi = support_1d(pot)
            return lo + (hi - lo) * u


# ---------------------------------------------------------------- sampling

def _as_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_body(body: ConvexBody, n: int, seed, method: str = "random") -> tuple[np.ndarray, float]:
    """
        Uniform points in a body by rejection from its bounding box; returns (points, acceptance).
        method "qmc" uses a scrambled Halton proposal.
        :raises RejectionError: acceptance below 1e-4
    """
    rng = _as_rng(seed)
    lo, hi = body.bounding_box()
    kept, proposed = list(), 0
    batch = max(2 * n, 1024)
    sampler = None
    if method == "qmc":
        from scipy.stats import qmc
        sampler = qmc.Halton(d=body.dimension, scramble=True, seed=rng)
    count = 0
    while count < n:
        unit = sampler.random(batch) if sampler is not None else rng.random((batch, body.dimension))
        points = lo + (hi - lo) * unit
        inside = points[body.contains(points)]
        proposed += batch
        kept.append(inside)
        count += len(inside)
        acceptance = count / proposed
        if proposed >= 10 * batch and acceptance < 1e-4:
            raise RejectionError(acceptance)
    acceptance = count / proposed
    if acceptance < 0.05:
        logger.warning("rejection acceptance %.3f for %s", acceptance, body)
    else:
        logger.debug("rejection acceptance %.3f for %s", acceptance, body)
    return np.concatenate(kept)[:n], acceptance


def sample(pot: Potential, n: int, seed, method: str = "random") -> np.ndarray:
    """
        n points of the measure as rows, deterministic given the seed (an int or a Generator).
        method "qmc" pushes a scrambled Halton design through the same transforms.
        :raises ParameterRangeError: n < 1
        :raises RejectionError: uniform body too thin for its bounding box
    """
    if n < 1:
        raise ParameterRangeError("n", n, "n >= 1")
    rng = _as_rng(seed)
    family, d = pot.family, pot.dimension

    def unit_cube(k: int) -> np.ndarray:
        u = halton_points(k, n, rng) if method == "qmc" else rng.random((n, k))
        return np.clip(u, 1e-16, 1.0 - 1e-16)

    match family:
        case UniformBody(body=body):
            return sample_body(body, n, rng, method)[0]
        case Gaussian(variance=var):
            return family.center + math.sqrt(var) * special.ndtri(unit_cube(d))
        case HuberProduct():
            one = make_potential(HuberProduct(1))
            u = unit_cube(d)
            return np.column_stack([quantile_1d(one, u[:, i]) for i in range(d)])
        case PowerLaw(beta=beta) if d > 1:
            u = unit_cube(d + 1)
            direction = special.ndtri(u[:, :d])
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            radius = special.gammaincinv(d / beta, u[:, d]) ** (1.0 / beta)
            return direction * radius[:, None]
        case _ if d == 1:
            return quantile_1d(pot, unit_cube(1)[:, 0])[:, None]
    raise DomainError("family", family, "families with a sampler (multivariate polynomials are not sampled)")


def curvature_bounds(pot: Potential, h) -> tuple[float, float]:
    """
        (Lambda, M): sup of V_hh and sup of |V_h| along the unit direction h; inf when unbounded.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    match pot.family:
        case Gaussian(variance=var):
            return 1.0 / var, math.inf
        case HuberProduct():
            return float(np.sum(h ** 2)), float(np.sum(np.abs(h)))
        case PowerLaw(beta=beta) if beta == 2.0:
            return 2.0, math.inf
        case ConvexPolynomial(quartic=c) if c == 0:
            return float(h @ pot.family.matrix @ h), math.inf
        case UniformBody():
            return 0.0, 0.0
    return math.inf, math.inf


# ---------------------------------------------------------------- moduli

class ModulusKind(str, Enum):
    DELTA = "delta"
    BREGMAN = "bregman"
    BREGMAN_CONVEXIFIED = "bregman_convexified"
    BREGMAN_CONJUGATE = "bregman_conjugate"


@dataclass(frozen=True, slots=True, repr=False, eq=False)
class ConvexityModulus:
    """
        A tabulated modulus: grid starts at t=0, values are nondecreasing and vanish at t=0.
        Between positive nodes the values are interpolated as local power laws (log-log linear),
        so tabulated power laws are reproduced exactly.
    """
    kind: ModulusKind
    grid: np.ndarray
    values: np.ndarray
    norm: Norm

    def __post_init__(self):
        grid, values = np.asarray(self.grid, dtype=float), np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) < 2:
            raise ParameterRangeError("grid", grid.shape, "two matching one-dimensional tables")
        if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
            raise ParameterRangeError("grid", grid[:3], "strictly increasing values starting at 0")
        if values[0] != 0.0:
            raise ParameterRangeError("values[0]", values[0], "0 at t=0")
        if np.any(np.diff(values) < -1e-12 * max(1.0, float(np.max(np.abs(values))))):
            raise NotMonotoneError(f"{ModulusKind(self.kind).value} modulus")
        if self.kind == ModulusKind.BREGMAN_CONVEXIFIED and not _is_convex(grid, values):
            raise NotConvexError("convexified modulus", grid[:3])
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", np.maximum.accumulate(values))
        object.__setattr__(self, "kind", ModulusKind(self.kind))
        object.__setattr__(self, "norm", Norm(self.norm))

    def __repr__(self) -> str:
        return f"ConvexityModulus(kind={self.kind.value}, norm={self.norm.value}, t_max={self.t_max})"

    @property
    def t_max(self) -> float:
        return float(self.grid[-1])

    def _power_fit(self) -> tuple[float, float]:
        """(c, k) with value ~ c t^k fitted to the last decade of the grid"""
        mask = (self.grid >= self.t_max / 10.0) & (self.values > 0)
        if np.count_nonzero(mask) < 2:
            raise DomainError("modulus tail", self.values[-3:], "positive values over the last decade")
        k, log_c = np.polyfit(np.log(self.grid[mask]), np.log(self.values[mask]), 1)
        return float(math.exp(log_c)), float(k)

    def at(self, t, extrapolate: bool = False):
        """
            Modulus value at t >= 0.
            :raises DomainError: t beyond the grid without extrapolation
        """
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("t", t, "[0, inf)")
        beyond = t > self.t_max
        if np.any(beyond) and not extrapolate:
            raise DomainError("t", float(np.max(t)), f"[0, {self.t_max}]")
        g, v = self.grid, self.values
        tc = np.clip(t, 0.0, self.t_max)
        k = np.clip(np.searchsorted(g, tc, side="right") - 1, 0, len(g) - 2)
        g0, g1, v0, v1 = g[k], g[k + 1], v[k], v[k + 1]
        linear = v0 + (v1 - v0) * (tc - g0) / (g1 - g0)
        with np.errstate(divide="ignore", invalid="ignore"):
            power = np.log(v1 / v0) / np.log(g1 / g0)
            loglog = v0 * (tc / g0) ** power
        use_log = (g0 > 0) & (v0 > 0) & (v1 > 0)
        result = np.where(use_log, loglog, linear)
        if np.any(beyond):
            c, p = self._power_fit()
            result = np.where(beyond, c * np.maximum(t, self.t_max) ** p, result)
        return float(result) if result.ndim == 0 else result

    def inverse(self, u) -> tuple[np.ndarray, bool]:
        """
            Smallest t with modulus(t) = u, inverting the interpolant segment by segment.
            Values above the table use the power fit of the last decade; the flag reports that.
            :raises DomainError: the modulus is flat at a requested level (not invertible)
        """
        u = np.atleast_1d(np.asarray(u, dtype=float))
        g, v = self.grid, self.values
        extrapolated = bool(np.any(u > v[-1]))
        k = np.clip(np.searchsorted(v, u, side="left") - 1, 0, len(g) - 2)
        v0, v1, g0, g1 = v[k], v[k + 1], g[k], g[k + 1]
        inside = (u > 0) & (u <= v[-1])
        if np.any(inside & (v1 <= v0)):
            raise DomainError("u", float(u[inside & (v1 <= v0)][0]), "levels where the modulus strictly increases")
        with np.errstate(divide="ignore", invalid="ignore"):
            power = np.log(v1 / v0) / np.log(g1 / g0)
            loglog = g0 * (u / v0) ** (1.0 / power)
            linear = g0 + (g1 - g0) * (u - v0) / (v1 - v0)
        use_log = (g0 > 0) & (v0 > 0)
        t = np.where(use_log, loglog, linear)
        t = np.where(u <= 0, 0.0, t)
        if extrapolated:
            c, p = self._power_fit()
            t = np.where(u > v[-1], (u / c) ** (1.0 / p), t)
            logger.warning("%r inverted beyond its grid with power %.4f", self, p)
        return t, extrapolated

    def rows(self) -> list[tuple[float, float, str, str]]:
        """CSV rows (t, value, kind, norm)"""
        return [(float(t), float(v), self.kind.value, self.norm.value) for t, v in zip(self.grid, self.values)]


def _is_convex(grid: np.ndarray, values: np.ndarray) -> bool:
    slopes = np.diff(values) / np.diff(grid)
    return bool(np.all(np.diff(slopes) >= -1e-9 * max(1.0, float(np.max(np.abs(slopes))))))


def _on_finite_energy(pot: Potential):
    if isinstance(pot.family, UniformBody):
        raise DomainError("family", pot.family, "potentials finite on the whole space")


def _delta_objective(pot: Potential):
    energy = pot.family.energy

    def objective(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return energy(x + y) + energy(x - y) - 2.0 * energy(x)

    return objective


def _bregman_objective(pot: Potential):
    energy, gradient = pot.family.energy, pot.family.gradient

    def objective(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return energy(x + y) - energy(x) - np.sum(gradient(x) * y, axis=-1)

    return objective


def _search_modulus(pot: Potential, objective, t: float, norm: Norm, search: SearchSpec) -> Extremum:
    _on_finite_energy(pot)
    if t < 0:
        raise DomainError("t", t, "[0, inf)")
    if t == 0:
        return Extremum(0.0, (0.0,) * pot.dimension, (0.0,) * pot.dimension)
    found = grid_infimum(objective, pot.dimension, t, norm, search)
    return Extremum(max(found.value, 0.0), found.point, found.direction)


def modulus_delta(pot: Potential, t: float, norm: Norm = Norm.L2, search: SearchSpec = SearchSpec()) -> float:
    """
        Infimum of the second difference over the search box and ||y|| = t.
        :raises EmptySearchError:
        :raises DomainError: t < 0 or a potential infinite outside a body
    """
    return _search_modulus(pot, _delta_objective(pot), t, norm, search).value


def modulus_bregman(pot: Potential, t: float, norm: Norm = Norm.L2, search: SearchSpec = SearchSpec()) -> float:
    """
        Infimum of the Bregman divergence over the search box and ||y|| = t.
        :raises EmptySearchError:
        :raises DomainError: t < 0 or a potential infinite outside a body
    """
    return _search_modulus(pot, _bregman_objective(pot), t, norm, search).value


def modulus_grid(t_max: float = 8.0, count: int = 64) -> np.ndarray:
    on_non_positive("t_max", t_max)
    return np.concatenate([[0.0], np.logspace(-3.0, math.log10(t_max), count)])


def modulus_from_values(kind: ModulusKind, grid, values, norm: Norm = Norm.L2) -> ConvexityModulus:
    """A modulus tabulated from given values; the infimum over ||y|| >= t is a reverse running minimum"""
    values = np.minimum.accumulate(np.asarray(values, dtype=float)[::-1])[::-1]
    return ConvexityModulus(kind=ModulusKind(kind), grid=np.asarray(grid, dtype=float), values=values, norm=Norm(norm))


def tabulate_modulus(
        pot: Potential,
        kind: ModulusKind,
        norm: Norm = Norm.L2,
        grid: Optional[np.ndarray] = None,
        search: SearchSpec = SearchSpec(),
) -> ConvexityModulus:
    """Tabulates delta or b on a grid (default: 0 plus 64 log-spaced points in [1e-3, 8])"""
    kind = ModulusKind(kind)
    grid = modulus_grid() if grid is None else np.asarray(grid, dtype=float)
    compute = {ModulusKind.DELTA: modulus_delta, ModulusKind.BREGMAN: modulus_bregman}.get(kind)
    if compute is None:
        raise ParameterRangeError("kind", kind.value, "delta or bregman")
    values = [compute(pot, float(t), norm, search) for t in grid]
    return modulus_from_values(kind, grid, values, norm)


def _cross(o: tuple[Fraction, Fraction], a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convexify_modulus(m: ConvexityModulus) -> ConvexityModulus:
    """
        Lower convex envelope of the tabulated points: the largest convex minorant on [0, t_max].
        Orientation tests are exact on the rationals of the grid; collinear points are kept.
        :raises EmptySearchError: fewer than 3 grid points
        :raises ParameterRangeError: not a Bregman modulus
    """
    on_empty("grid with at least 3 points", len(m.grid) - 2)
    if m.kind not in (ModulusKind.BREGMAN, ModulusKind.BREGMAN_CONVEXIFIED):
        raise ParameterRangeError("kind", m.kind.value, "bregman")
    hull: list[tuple[Fraction, Fraction]] = list()
    for t, v in zip(m.grid, m.values):
        point = (Fraction(float(t)), Fraction(float(v)))
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], point) < 0:
            hull.pop()
        hull.append(point)
    hull_t = np.array([float(p[0]) for p in hull])
    hull_v = np.array([float(p[1]) for p in hull])
    values = np.minimum(np.interp(m.grid, hull_t, hull_v), m.values)
    return ConvexityModulus(ModulusKind.BREGMAN_CONVEXIFIED, m.grid.copy(), values, m.norm)


def conjugate_modulus(m: ConvexityModulus) -> ConvexityModulus:
    """
        Legendre transform t -> sup_{s>0} (ts - m(s)) on the same grid.
        The discrete maximizer over grid nodes is refined on its neighbouring cells.
        Slopes beyond the last grid slope are capped by s <= t_max.
        :raises NotMonotoneError:
    """
    if np.any(np.diff(m.values) < 0):
        raise NotMonotoneError(f"{m.kind.value} modulus")
    s, b = m.grid, m.values
    out = np.empty_like(s)
    for i, t in enumerate(s):
        gains = t * s - b
        j = int(np.argmax(gains))
        best = float(gains[j])
        lo, hi = s[max(j - 1, 0)], s[min(j + 1, len(s) - 1)]
        if hi > lo:
            found = minimize_scalar(lambda z: -(t * z - m.at(z)), bounds=(lo, hi), method="bounded",
                                    options={"xatol": 1e-13})
            best = max(best, -float(found.fun))
        out[i] = max(best, 0.0)
    out[0] = 0.0
    kind = ModulusKind.BREGMAN_CONVEXIFIED if m.kind == ModulusKind.BREGMAN_CONJUGATE else ModulusKind.BREGMAN_CONJUGATE
    return ConvexityModulus(kind, s.copy(), np.maximum.accumulate(out), m.norm)


# ---------------------------------------------------------------- growth constants

def _ratio_extremum(pot: Potential, objective, power: float, t_grid, norm: Norm, search: SearchSpec, upper: bool):
    _on_finite_energy(pot)
    best = None
    for t in np.asarray(t_grid, dtype=float):
        if upper:
            found = grid_infimum(lambda x, y: -objective(x, y), pot.dimension, t, norm, search)
            value = -found.value / t ** power
            if best is None or value > best:
                best = value
        else:
            found = grid_infimum(objective, pot.dimension, t, norm, search)
            value = found.value / t ** power
            if best is None or value < best:
                best = value
    return float(best)


_CONSTANT_GRID = np.logspace(-2.0, math.log10(4.0), 16)


def second_difference_constant(
        pot: Potential,
        exponent: float,
        upper: bool,
        norm: Norm = Norm.L2,
        t_grid=_CONSTANT_GRID,
        search: SearchSpec = SearchSpec(),
) -> float:
    """
        upper: A_p = sup (V(x+y)+V(x-y)-2V(x)) / ||y||^(p+1); otherwise A_q = inf of the same ratio,
        over the search box and the t grid.
    """
    return _ratio_extremum(pot, _delta_objective(pot), exponent + 1.0, t_grid, norm, search, upper)


def holder_gradient_constant(
        pot: Potential,
        p: float,
        norm: Norm = Norm.L2,
        t_grid=_CONSTANT_GRID,
        search: SearchSpec = SearchSpec(),
) -> float:
    """C_p = sup ||grad V(x+y) - grad V(x)||_* / ||y||^p"""
    gradient = pot.family.gradient

    def objective(x, y):
        return dual_norm_of(gradient(x + y) - gradient(x), norm)

    return _ratio_extremum(pot, objective, p, t_grid, norm, search, upper=True)


def convexity_gradient_constant(
        pot: Potential,
        q: float,
        norm: Norm = Norm.L2,
        t_grid=_CONSTANT_GRID,
        search: SearchSpec = SearchSpec(),
) -> float:
    """C_q = inf <grad V(x+y) - grad V(x), y> / ||y||^(q+1)"""
    gradient = pot.family.gradient

    def objective(x, y):
        return np.sum((gradient(x + y) - gradient(x)) * y, axis=-1)

    return _ratio_extremum(pot, objective, q + 1.0, t_grid, norm, search, upper=False)
