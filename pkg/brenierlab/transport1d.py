"""
    Exact one-dimensional optimal transport.

    The Brenier map of a 1D measure mu onto nu is the monotone rearrangement T = Q_nu o F_mu,
    T = phi' for a convex potential phi, and T'(x) = rho_mu(x) / rho_nu(T(x)) by the change of variables.
    The map is stored as a cubic Hermite spline through exact values and exact slopes on adaptive
    nodes covering the source quantile band [1e-6, 1 - 1e-6].
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline, PPoly

from brenierlab.common._guards import on_bad_exponents, on_non_positive, on_outside_interval
from brenierlab.common.exceptions import BoundaryContactError, DomainError, NotMonotoneError, ParameterRangeError
from brenierlab.measures import Potential, cdf_1d, quantile_1d, support_1d
from brenierlab.search import Extremum, PairSpec, derived_rng, sampled_supremum


__all__ = [
    "TransportMap1D",
    "QUANTILE_BAND",
    "build_map_1d",
    "map_eval",
    "map_derivative",
    "potential_second_difference",
    "compose_maps",
    "theorem1_constant",
    "empirical_holder_1d",
    "map_table",
]


logger = logging.getLogger(__name__)

QUANTILE_BAND = (1e-6, 1.0 - 1e-6)
_U_FLOOR = 1e-300
_U_CEIL = 1.0 - 2.0 ** -53


@dataclass(frozen=True, slots=True, repr=False, eq=False)
class TransportMap1D:
    """
        Monotone map of source onto target. nodes, values and slopes are x, T(x), T'(x)
        on the quantile band; outside it the map is the exact composition.
    """
    source: Potential
    target: Potential
    nodes: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    spline: CubicHermiteSpline = field(repr=False)
    primitive: PPoly = field(repr=False)

    @property
    def band(self) -> tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])

    def __repr__(self) -> str:
        return f"TransportMap1D(source={self.source.family}, target={self.target.family}, nodes={len(self.nodes)})"

    def __call__(self, x):
        return map_eval(self, x)


def _on_one_dimensional(pot: Potential, role: str):
    if pot.dimension != 1:
        raise DomainError(f"{role} dimension", pot.dimension, "{1}")


def _density_1d(pot: Potential, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(-(pot.family.energy(np.asarray(x, dtype=float).reshape(-1, 1)) + pot.log_normalizer))


def _adaptive_nodes(source: Potential, resolution: int) -> np.ndarray:
    """Half the nodes equally spaced in the source quantile, half equally spaced in x"""
    lo_u, hi_u = QUANTILE_BAND
    by_mass = quantile_1d(source, np.linspace(lo_u, hi_u, resolution // 2))
    by_length = np.linspace(by_mass[0], by_mass[-1], resolution - resolution // 2)
    nodes = np.unique(np.concatenate([by_mass, by_length]))
    keep = np.concatenate([[True], np.diff(nodes) > 1e-12 * max(1.0, float(np.max(np.abs(nodes))))])
    return nodes[keep]


def _compose(source: Potential, target: Potential, x: np.ndarray) -> np.ndarray:
    u = np.clip(cdf_1d(source, x), _U_FLOOR, _U_CEIL)
    return quantile_1d(target, u)


def _from_nodes(source: Potential, target: Potential, nodes, values, slopes) -> TransportMap1D:
    if np.any(np.diff(values) < 0):
        raise NotMonotoneError("transport map table")
    spline = CubicHermiteSpline(nodes, values, slopes)
    return TransportMap1D(source=source, target=target, nodes=nodes, values=values, slopes=slopes,
                          spline=spline, primitive=spline.antiderivative())


def build_map_1d(source: Potential, target: Potential, resolution: int = 4096) -> TransportMap1D:
    """
        T = Q_nu o F_mu with exact slopes rho_mu / rho_nu(T) at the nodes.
        The built-in families all have interval supports, so the rearrangement is always defined.
        :raises DomainError: a potential is not one-dimensional
        :raises ParameterRangeError: resolution below 16
    """
    _on_one_dimensional(source, "source")
    _on_one_dimensional(target, "target")
    if resolution < 16:
        raise ParameterRangeError("resolution", resolution, "at least 16 nodes")
    nodes = _adaptive_nodes(source, resolution)
    values = _compose(source, target, nodes)
    slopes = _density_1d(source, nodes) / _density_1d(target, values)
    logger.debug("1D map %s -> %s on %d nodes over [%.4f, %.4f]",
                 source.family, target.family, len(nodes), nodes[0], nodes[-1])
    return _from_nodes(source, target, nodes, values, slopes)


def _split(tm: TransportMap1D, x: np.ndarray) -> np.ndarray:
    lo, hi = tm.band
    return (x >= lo) & (x <= hi)


def map_eval(tm: TransportMap1D, x):
    """T(x) = phi'(x); spline on the band, exact composition elsewhere"""
    arr = np.asarray(x, dtype=float)
    flat = arr.reshape(-1)
    inside = _split(tm, flat)
    out = np.empty_like(flat)
    out[inside] = tm.spline(flat[inside])
    if np.any(~inside):
        out[~inside] = _compose(tm.source, tm.target, flat[~inside])
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def map_derivative(tm: TransportMap1D, x):
    """
        phi''(x) = rho_mu(x) / rho_nu(T(x)) > 0.
        :raises BoundaryContactError: T(x) reaches the boundary of the target support
    """
    arr = np.asarray(x, dtype=float)
    flat = arr.reshape(-1)
    image = np.asarray(map_eval(tm, flat))
    lo, hi = support_1d(tm.target)
    target_density = _density_1d(tm.target, image)
    bad = (image <= lo) | (image >= hi) | ~(target_density > 0)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise BoundaryContactError(float(flat[k]), float(image[k]))
    out = _density_1d(tm.source, flat) / target_density
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


def potential_second_difference(tm: TransportMap1D, x, t):
    """
        phi(x+t) + phi(x-t) - 2 phi(x) = int_x^{x+t} T - int_{x-t}^x T.
        The spline antiderivative serves the band; a quadrature of the exact map covers the rest.
    """
    x_arr, t_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    xs, ts = x_arr.reshape(-1), t_arr.reshape(-1)
    out = np.empty_like(xs)
    inside = _split(tm, xs - np.abs(ts)) & _split(tm, xs + np.abs(ts))
    p = tm.primitive
    out[inside] = p(xs[inside] + ts[inside]) + p(xs[inside] - ts[inside]) - 2.0 * p(xs[inside])
    for k in np.flatnonzero(~inside):
        right, _ = integrate.quad(lambda s: map_eval(tm, s), xs[k], xs[k] + ts[k], epsabs=1e-13, epsrel=1e-11)
        left, _ = integrate.quad(lambda s: map_eval(tm, s), xs[k] - ts[k], xs[k], epsabs=1e-13, epsrel=1e-11)
        out[k] = right - left
    return float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)


def compose_maps(first: TransportMap1D, second: TransportMap1D) -> TransportMap1D:
    """
        The map of first.source onto second.target as second o first, on the nodes of first.
        :raises ParameterRangeError: first.target is not second.source
    """
    if first.target.family != second.source.family:
        raise ParameterRangeError("second.source", second.source.family, f"{first.target.family}")
    values = np.asarray(map_eval(second, first.values))
    slopes = first.slopes * np.asarray(map_derivative(second, first.values))
    return _from_nodes(first.source, second.target, first.nodes.copy(), values, slopes)


def theorem1_constant(p: float, q: float, c_p: float, c_q: float) -> tuple[float, float]:
    """
        Hoelder constant and exponent of phi' when |V'(x)-V'(y)| <= C_p |x-y|^p and
        (W'(x)-W'(y))(x-y) >= C_q |x-y|^(q+1): ((q+1) C_p / ((p+1) C_q))^(1/(q+1)), (p+1)/(q+1).
        :raises ParameterRangeError:
    """
    on_bad_exponents(p, q)
    on_non_positive("C_p", c_p)
    on_non_positive("C_q", c_q)
    constant = ((q + 1.0) * c_p / ((p + 1.0) * c_q)) ** (1.0 / (q + 1.0))
    return constant, (p + 1.0) / (q + 1.0)


def _pair_decoder(tm: TransportMap1D, pairs: PairSpec):
    """Unit square -> (x, y): x by source quantile in the band, y = x + t with log-uniform t"""
    lo_u, hi_u = QUANTILE_BAND
    band_hi = tm.band[1]
    log_ratio = math.log(pairs.t_max / pairs.t_min)

    def decode(unit: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u = lo_u + (hi_u - lo_u) * np.clip(unit[:, 0], 0.0, 1.0)
        x = quantile_1d(tm.source, u)
        t = pairs.t_min * np.exp(log_ratio * unit[:, 1])
        y = x + t
        return x, np.where(y <= band_hi, y, np.nan)

    return decode


def _on_pair_spec(pairs: PairSpec):
    on_non_positive("t_min", pairs.t_min)
    if not pairs.t_max > pairs.t_min:
        raise ParameterRangeError("t_max", pairs.t_max, f"t_max > t_min = {pairs.t_min}")


def empirical_holder_1d(tm: TransportMap1D, alpha: float, pairs: PairSpec = PairSpec(), seed=0) -> Extremum:
    """
        sup |T(x) - T(y)| / |x - y|^alpha over sampled pairs in the quantile band.
        The maximizing pair is reported as the extremum point (x, y).
        :raises DomainError: alpha outside (0, 1]
        :raises ParameterRangeError: t_min <= 0 or t_max <= t_min
        :raises EmptySearchError: no admissible pair
    """
    on_outside_interval("alpha", alpha, 0.0, 1.0)
    if alpha == 0:
        raise DomainError("alpha", alpha, "(0, 1]")
    _on_pair_spec(pairs)
    rng = seed if isinstance(seed, np.random.Generator) else derived_rng(seed, "holder_1d")
    decode = _pair_decoder(tm, pairs)

    def ratio(unit: np.ndarray) -> np.ndarray:
        x, y = decode(unit)
        values = np.full(len(x), np.nan)
        ok = np.isfinite(y)
        values[ok] = np.abs(map_eval(tm, y[ok]) - map_eval(tm, x[ok])) / np.abs(y[ok] - x[ok]) ** alpha
        return values

    found = sampled_supremum(ratio, 2, pairs, rng)
    x, y = decode(np.array([found.point]))
    return Extremum(value=found.value, point=(float(x[0]), float(y[0])))


def map_table(tm: TransportMap1D, count: int = 401) -> np.ndarray:
    """Rows (x, T(x), T'(x)) equally spaced over the quantile band"""
    lo, hi = tm.band
    x = np.linspace(lo, hi, count)
    return np.column_stack([x, map_eval(tm, x), map_derivative(tm, x)])
