"""
    Desk-scale optimal transport in dimensions 2 and 3 by entropic regularization.

    Source and target are discretized by low-discrepancy samples with uniform weights and the
    dual potentials (f, g) of the quadratic cost |x - y|^2 / 2 are found by log-domain Sinkhorn sweeps.
    The c-transform of g extends the solution off the samples and gives the smooth convex surrogate

        phi(x) = eps * log sum_j b_j exp((<x, y_j> + g_j - |y_j|^2 / 2) / eps)

    whose gradient is the barycentric map T(x) = sum_j w_j(x) y_j and whose Hessian is Cov_w(y) / eps.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import logsumexp, softmax

from brenierlab.common._guards import on_dimension_mismatch, on_non_positive, on_unit_vector
from brenierlab.common.exceptions import DomainError, NonConvergenceError, ParameterRangeError
from brenierlab.measures import ConvexBody, Potential, sample, sample_body
from brenierlab.result import Ok, Err, Result
from brenierlab.search import Extremum, PairSpec, derived_rng, sampled_supremum


__all__ = [
    "EntropicTransport",
    "NonConvergence",
    "default_epsilon",
    "solve_entropic",
    "map_eval",
    "potential_value",
    "potential_gradient",
    "potential_hessian",
    "potential_second_quotient",
    "directional_derivatives",
    "supporting_slab",
    "check_points",
    "empirical_holder_nd",
    "empirical_lipschitz_nd",
    "empirical_hessian_norm_nd",
    "monotonicity_gap",
    "plan_rows",
]


logger = logging.getLogger(__name__)

Target = Union[ConvexBody, Potential]


@dataclass(frozen=True, slots=True, repr=False, eq=False)
class EntropicTransport:
    source: Potential
    target: Target
    source_samples: np.ndarray
    target_samples: np.ndarray
    epsilon: float
    dual_f: np.ndarray
    dual_g: np.ndarray
    iterations_run: int
    marginal_error: float
    dual_change: float
    log_weights: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.source_samples.shape[1]

    def __repr__(self) -> str:
        return (f"EntropicTransport(d={self.dimension}, n={len(self.source_samples)}, m={len(self.target_samples)}, "
                f"epsilon={self.epsilon:.4g}, iterations={self.iterations_run}, "
                f"marginal_error={self.marginal_error:.3e})")


@dataclass(frozen=True, slots=True, repr=True)
class NonConvergence:
    """The partial solution of a Sinkhorn run that hit max_iter"""
    transport: EntropicTransport

    @property
    def error(self) -> NonConvergenceError:
        return NonConvergenceError(self.transport.iterations_run, self.transport.marginal_error)


def _target_extent(target: Target, samples: np.ndarray) -> float:
    if isinstance(target, ConvexBody):
        return target.diameter()
    return float(np.linalg.norm(samples.max(axis=0) - samples.min(axis=0)))


def default_epsilon(diameter: float) -> float:
    return 5e-3 * diameter ** 2


def _target_samples(target: Target, m: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(target, ConvexBody):
        return sample_body(target, m, rng, method="qmc")[0]
    return sample(target, m, rng, method="qmc")


def _half_cost(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 0.5 * (np.sum(x ** 2, axis=1)[:, None] + np.sum(y ** 2, axis=1)[None, :]) - x @ y.T


def solve_entropic(
        source: Potential,
        target: Target,
        n: int = 2000,
        m: int = 2000,
        epsilon: float | None = None,
        tol: float = 1e-6,
        max_iter: int = 10_000,
        seed=0,
        dual_tol: float = 1e-8,
) -> Result[EntropicTransport, NonConvergence]:
    """
        Log-domain Sinkhorn iterations until the L1 error of the source marginal is below tol
        and the last sweep moved the dual potential f by less than dual_tol in sup norm.
        The target is a convex body (uniform measure) or a potential; epsilon defaults to 5e-3 diam^2.
        Returns Err(NonConvergence) with the partial transport after max_iter sweeps.
        :raises DomainError: dimension other than 2 or 3
        :raises ParameterRangeError: non-positive epsilon, n, m or tolerance
    """
    d = source.dimension
    if d not in (2, 3):
        raise DomainError("dimension", d, "{2, 3}")
    if target.dimension != d:
        raise DomainError("target dimension", target.dimension, f"{{{d}}}")
    on_non_positive("n", n)
    on_non_positive("m", m)
    rng = seed if isinstance(seed, np.random.Generator) else derived_rng(seed, "entropic")
    x = sample(source, n, rng, method="qmc")
    y = _target_samples(target, m, rng)
    eps = default_epsilon(_target_extent(target, y)) if epsilon is None else float(epsilon)
    on_non_positive("epsilon", eps)
    on_non_positive("tol", tol)
    on_non_positive("dual_tol", dual_tol)

    cost = _half_cost(x, y)
    log_a, log_b = -math.log(n), -math.log(m)
    f, g = np.zeros(n), np.zeros(m)
    marginal_error, change, iteration = math.inf, math.inf, 0
    while iteration < max_iter:
        iteration += 1
        g = -eps * logsumexp(log_a + (f[:, None] - cost) / eps, axis=0)
        row = logsumexp(log_b + (g[None, :] - cost) / eps, axis=1)
        marginal_error = float(np.sum(np.abs(np.expm1(f / eps + row))) / n)
        f_next = -eps * row
        change = float(np.max(np.abs(f_next - f)))
        f = f_next
        if iteration % 100 == 0:
            logger.debug("sinkhorn sweep %d: marginal error %.3e, dual change %.3e", iteration, marginal_error, change)
        if marginal_error < tol and change < dual_tol:
            break

    offsets = log_b + (g - 0.5 * np.sum(y ** 2, axis=1)) / eps
    tp = EntropicTransport(source=source, target=target, source_samples=x, target_samples=y, epsilon=eps,
                           dual_f=f, dual_g=g, iterations_run=iteration, marginal_error=marginal_error,
                           dual_change=change, log_weights=offsets)
    if marginal_error < tol and change < dual_tol:
        logger.debug("sinkhorn converged: %r", tp)
        return Ok(tp)
    logger.warning("sinkhorn stopped without convergence: %r", tp)
    return Err(NonConvergence(tp))


def _weights(tp: EntropicTransport, x: np.ndarray) -> np.ndarray:
    return softmax(tp.log_weights[None, :] + (x @ tp.target_samples.T) / tp.epsilon, axis=1)


def _rows(tp: EntropicTransport, x) -> tuple[np.ndarray, bool]:
    arr = on_dimension_mismatch(x, tp.dimension)
    return np.atleast_2d(arr), arr.ndim == 1


def potential_value(tp: EntropicTransport, x):
    """The convex surrogate phi at a point or at rows of points"""
    rows, single = _rows(tp, x)
    values = tp.epsilon * logsumexp(tp.log_weights[None, :] + (rows @ tp.target_samples.T) / tp.epsilon, axis=1)
    return float(values[0]) if single else values


def potential_gradient(tp: EntropicTransport, x) -> np.ndarray:
    """grad phi: the barycentric projection onto the target samples"""
    rows, single = _rows(tp, x)
    mapped = _weights(tp, rows) @ tp.target_samples
    return mapped[0] if single else mapped


map_eval = potential_gradient


def potential_hessian(tp: EntropicTransport, x) -> np.ndarray:
    """D^2 phi = Cov_w(y) / eps, one d x d matrix per row"""
    rows, single = _rows(tp, x)
    w = _weights(tp, rows)
    mean = w @ tp.target_samples
    second = np.einsum("kj,ja,jb->kab", w, tp.target_samples, tp.target_samples)
    hessian = (second - np.einsum("ka,kb->kab", mean, mean)) / tp.epsilon
    return hessian[0] if single else hessian


def directional_derivatives(tp: EntropicTransport, x, h) -> tuple[np.ndarray, np.ndarray]:
    """(phi_h, phi_hh) at rows x along the unit direction h"""
    h = on_unit_vector(h)
    rows, _ = _rows(tp, x)
    w = _weights(tp, rows)
    projected = tp.target_samples @ h
    first = w @ projected
    second = (w @ projected ** 2 - first ** 2) / tp.epsilon
    return first, second


def potential_second_quotient(tp: EntropicTransport, x, h, t: float):
    """
        phi(x+th) + phi(x-th) - 2 phi(x) for the surrogate potential.
        :raises DomainError: t <= 2 sqrt(eps), where entropic smoothing dominates
    """
    h = on_unit_vector(h)
    if not t > 2.0 * math.sqrt(tp.epsilon):
        raise DomainError("t", t, f"t > 2 sqrt(eps) = {2.0 * math.sqrt(tp.epsilon):.4g}")
    rows, single = _rows(tp, x)
    step = t * h[None, :]
    values = potential_value(tp, rows + step) + potential_value(tp, rows - step) - 2.0 * potential_value(tp, rows)
    values = np.atleast_1d(values)
    return float(values[0]) if single else values


def supporting_slab(body: ConvexBody, h) -> tuple[float, float]:
    """
        (t0, a): midpoint and half-width of {<y, h> : y in body}.
        :raises DomainError: h is not a unit vector
        :raises UnboundedBodyError:
    """
    h = on_unit_vector(h)
    lo, hi = body.support(h)
    return 0.5 * (lo + hi), 0.5 * (hi - lo)


def check_points(tp: EntropicTransport, count: int = 256) -> np.ndarray:
    """The leading source samples: a low-discrepancy prefix of the source measure"""
    return tp.source_samples[:count]


def _pair_decoder(tp: EntropicTransport, pairs: PairSpec):
    """Unit cube of dimension 2d -> (x, y): x in the central box of the source samples, then length and direction"""
    d = tp.dimension
    lo = np.quantile(tp.source_samples, 0.01, axis=0)
    hi = np.quantile(tp.source_samples, 0.99, axis=0)
    t_min = max(pairs.t_min, 4.0 * math.sqrt(tp.epsilon))
    if not pairs.t_max > t_min:
        raise ParameterRangeError("t_max", pairs.t_max, f"t_max > {t_min:.4g}")
    log_ratio = math.log(pairs.t_max / t_min)

    def decode(unit: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = lo + (hi - lo) * unit[:, :d]
        t = t_min * np.exp(log_ratio * unit[:, d])
        if d == 2:
            angle = 2.0 * math.pi * unit[:, d + 1]
            v = np.column_stack([np.cos(angle), np.sin(angle)])
        else:
            z = 2.0 * unit[:, d + 1] - 1.0
            angle = 2.0 * math.pi * unit[:, d + 2]
            r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
            v = np.column_stack([r * np.cos(angle), r * np.sin(angle), z])
        y = x + t[:, None] * v
        inside = np.all((y >= lo) & (y <= hi), axis=1)
        y[~inside] = np.nan
        return x, y

    return decode


def empirical_holder_nd(tp: EntropicTransport, alpha: float, pairs: PairSpec = PairSpec(), seed=0) -> Extremum:
    """
        sup |T(x) - T(y)| / |x - y|^alpha over pairs at separation >= 4 sqrt(eps).
        The maximizing pair is the extremum point (x..., y...).
        :raises DomainError: alpha outside (0, 1]
        :raises EmptySearchError:
    """
    if not 0 < alpha <= 1:
        raise DomainError("alpha", alpha, "(0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else derived_rng(seed, "holder_nd")
    decode = _pair_decoder(tp, pairs)

    def ratio(unit: np.ndarray) -> np.ndarray:
        x, y = decode(unit)
        values = np.full(len(x), np.nan)
        ok = np.all(np.isfinite(y), axis=1)
        if np.any(ok):
            moved = np.linalg.norm(map_eval(tp, y[ok]) - map_eval(tp, x[ok]), axis=1)
            values[ok] = moved / np.linalg.norm(y[ok] - x[ok], axis=1) ** alpha
        return values

    found = sampled_supremum(ratio, 2 * tp.dimension, pairs, rng)
    x, y = decode(np.array([found.point]))
    return Extremum(value=found.value, point=(*x[0].tolist(), *y[0].tolist()))


def empirical_lipschitz_nd(tp: EntropicTransport, pairs: PairSpec = PairSpec(), seed=0) -> Extremum:
    return empirical_holder_nd(tp, 1.0, pairs, seed)


def empirical_hessian_norm_nd(tp: EntropicTransport, points=None) -> Extremum:
    """Largest operator norm of D^2 phi over the check points (or the given rows)"""
    rows = check_points(tp) if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    norms = np.linalg.eigvalsh(potential_hessian(tp, rows))[:, -1]
    k = int(np.argmax(norms))
    return Extremum(value=float(norms[k]), point=tuple(rows[k].tolist()))


def monotonicity_gap(tp: EntropicTransport, pair_count: int = 10_000, seed=0) -> float:
    """min <T(x) - T(y), x - y> over random pairs of source samples; the surrogate is convex, so >= 0"""
    rng = seed if isinstance(seed, np.random.Generator) else derived_rng(seed, "monotonicity")
    i = rng.integers(0, len(tp.source_samples), pair_count)
    j = rng.integers(0, len(tp.source_samples), pair_count)
    x, y = tp.source_samples[i], tp.source_samples[j]
    return float(np.min(np.sum((map_eval(tp, x) - map_eval(tp, y)) * (x - y), axis=1)))


def plan_rows(tp: EntropicTransport) -> np.ndarray:
    """Rows (x..., T(x)..., f) for the source samples"""
    return np.column_stack([tp.source_samples, map_eval(tp, tp.source_samples), tp.dual_f])
