"""
    Search machinery shared by the moduli tabulation and the empirical suprema.

    Infima are found on a regular grid of base points times a set of unit directions,
    refined by zooming around the incumbent and polished with a local optimizer.
    Suprema are found on a scrambled Halton design in a unit cube, zooming around every running-maximum record.
"""
import logging
import math
import zlib
from dataclasses import dataclass
from collections.abc import Callable
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from brenierlab.common._guards import on_empty


__all__ = [
    "Norm",
    "SearchSpec",
    "PairSpec",
    "Extremum",
    "derived_rng",
    "norm_of",
    "dual_norm_of",
    "unit_directions",
    "grid_infimum",
    "sampled_supremum",
    "halton_points",
]


logger = logging.getLogger(__name__)


class Norm(str, Enum):
    L2 = "L2"
    L1 = "L1"
    LINF = "Linf"


def norm_of(v: np.ndarray, norm: Norm) -> np.ndarray:
    """Row-wise norm of a batch of vectors"""
    v = np.atleast_2d(v)
    match Norm(norm):
        case Norm.L1:
            return np.sum(np.abs(v), axis=-1)
        case Norm.LINF:
            return np.max(np.abs(v), axis=-1)
        case _:
            return np.linalg.norm(v, axis=-1)


def dual_norm_of(v: np.ndarray, norm: Norm) -> np.ndarray:
    match Norm(norm):
        case Norm.L1:
            return norm_of(v, Norm.LINF)
        case Norm.LINF:
            return norm_of(v, Norm.L1)
        case _:
            return norm_of(v, Norm.L2)


@dataclass(frozen=True, slots=True, repr=True)
class SearchSpec:
    """
        Base points: a grid with per_axis nodes on [-box, box]^d (per_axis_3d in dimension 3).
        Directions: direction_count angles in 2D, axes and diagonals in 3D, +-1 in 1D.
    """
    box: float = 10.0
    per_axis: int = 65
    per_axis_3d: int = 17
    direction_count: int = 64
    refine_rounds: int = 2
    zoom: float = 8.0
    polish: bool = True


@dataclass(frozen=True, slots=True, repr=True)
class PairSpec:
    """Sampling design for suprema over pairs: count initial points, then refinement rounds"""
    count: int = 4096
    t_min: float = 1e-3
    t_max: float = 4.0
    refine_rounds: int = 3
    zoom: float = 8.0
    refine_count: int = 256


@dataclass(frozen=True, slots=True, repr=True)
class Extremum:
    value: float
    point: tuple[float, ...]
    direction: tuple[float, ...] = ()


def derived_rng(seed: int, stream: str) -> np.random.Generator:
    """An RNG stream that depends only on the master seed and the stream name"""
    sequence = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(stream.encode("utf-8")),))
    return np.random.default_rng(sequence)


def halton_points(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """n scrambled Halton points in [0, 1)^k; a longer design extends a shorter one"""
    sampler = qmc.Halton(d=k, scramble=True, seed=rng)
    return sampler.random(n)


def _normalize(directions: np.ndarray, norm: Norm) -> np.ndarray:
    return directions / norm_of(directions, norm)[:, None]


def unit_directions(dimension: int, norm: Norm, count: int = 64) -> np.ndarray:
    """Unit vectors (in the given norm) used as displacement directions"""
    if dimension == 1:
        return np.array([[1.0], [-1.0]])
    if dimension == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        return _normalize(np.column_stack([np.cos(angles), np.sin(angles)]), norm)
    grid = np.array(np.meshgrid(*([[-1.0, 0.0, 1.0]] * dimension), indexing="ij")).reshape(dimension, -1).T
    grid = grid[np.any(grid != 0.0, axis=1)]
    return _normalize(grid, norm)


def _angle_directions(angles: np.ndarray, norm: Norm) -> np.ndarray:
    return _normalize(np.column_stack([np.cos(angles), np.sin(angles)]), norm)


def _base_grid(center: np.ndarray, half_width: float, per_axis: int, box: float) -> np.ndarray:
    axes = [np.linspace(max(c - half_width, -box), min(c + half_width, box), per_axis) for c in center]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


def _best_on(objective, xs: np.ndarray, directions: np.ndarray, t: float, chunk: int = 1 << 18):
    best_value, best_x, best_y = np.inf, None, None
    step = max(1, chunk // max(1, len(directions)))
    for start in range(0, len(xs), step):
        block = xs[start:start + step]
        x_rep = np.repeat(block, len(directions), axis=0)
        y_rep = np.tile(directions * t, (len(block), 1))
        values = objective(x_rep, y_rep)
        k = int(np.argmin(values))
        if values[k] < best_value:
            best_value, best_x, best_y = float(values[k]), x_rep[k].copy(), y_rep[k].copy()
    return best_value, best_x, best_y


def grid_infimum(
        objective: Callable[[np.ndarray, np.ndarray], np.ndarray],
        dimension: int,
        t: float,
        norm: Norm,
        spec: SearchSpec,
) -> Extremum:
    """
        Infimum of objective(x, y) over x in the search box and ||y|| = t.
        objective receives row batches of x and y and returns one value per row.
        :raises EmptySearchError:
    """
    per_axis = spec.per_axis_3d if dimension >= 3 else spec.per_axis
    on_empty("base grid", per_axis)
    on_empty("directions", spec.direction_count if dimension == 2 else 1)
    norm = Norm(norm)
    directions = unit_directions(dimension, norm, spec.direction_count)
    xs = _base_grid(np.zeros(dimension), spec.box, per_axis, spec.box)
    value, x_best, y_best = _best_on(objective, xs, directions, t)

    half_width = spec.box
    angle_width = np.pi / spec.direction_count
    for rnd in range(spec.refine_rounds):
        half_width /= spec.zoom
        xs = _base_grid(x_best, half_width, per_axis, spec.box)
        if dimension == 2 and t > 0:
            center = np.arctan2(y_best[1], y_best[0])
            local = _angle_directions(center + np.linspace(-angle_width, angle_width, spec.direction_count), norm)
            angle_width /= spec.zoom
        else:
            local = directions
        candidate = _best_on(objective, xs, local, t)
        if candidate[0] < value:
            value, x_best, y_best = candidate
        logger.debug("refinement round %d: infimum %.6e", rnd + 1, value)

    if spec.polish and t > 0:
        value, x_best, y_best = _polish(objective, dimension, t, norm, spec.box, x_best, y_best, value)
    return Extremum(value=value, point=tuple(x_best.tolist()), direction=tuple(y_best.tolist()))


def _polish(objective, dimension, t, norm, box, x_best, y_best, value):
    if dimension == 2:
        theta0 = float(np.arctan2(y_best[1], y_best[0]))

        def unpack(z):
            return z[:2], _angle_directions(np.array([z[2]]), norm)[0] * t

        start = np.array([*x_best, theta0])
        bounds = [(-box, box), (-box, box), (theta0 - np.pi, theta0 + np.pi)]
    else:
        fixed = y_best.copy()

        def unpack(z):
            return z, fixed

        start = x_best.copy()
        bounds = [(-box, box)] * dimension

    def scalar(z):
        x, y = unpack(z)
        return float(objective(x[None, :], y[None, :])[0])

    found = minimize(scalar, start, method="Nelder-Mead", bounds=bounds,
                     options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
    if found.fun < value:
        x, y = unpack(found.x)
        return float(found.fun), np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return value, x_best, y_best


def _records(values: np.ndarray) -> np.ndarray:
    """Indices where the running maximum strictly increases; nan entries never qualify"""
    filled = np.where(np.isnan(values), -np.inf, values)
    previous = np.concatenate([[-np.inf], np.maximum.accumulate(filled)[:-1]])
    return np.flatnonzero(filled > previous)


def _refine(objective, k: int, pairs: PairSpec, point: np.ndarray, value: float, rng: np.random.Generator):
    half_width = 0.5
    for _ in range(pairs.refine_rounds):
        half_width /= pairs.zoom
        local = halton_points(k, pairs.refine_count, rng)
        local = np.clip(point + (2.0 * local - 1.0) * half_width, 0.0, 1.0)
        local_values = np.asarray(objective(local), dtype=float)
        if not np.all(np.isnan(local_values)):
            j = int(np.nanargmax(local_values))
            if local_values[j] > value:
                value, point = float(local_values[j]), local[j].copy()
    return value, point


def sampled_supremum(
        objective: Callable[[np.ndarray], np.ndarray],
        k: int,
        pairs: PairSpec,
        rng: np.random.Generator,
        first: Optional[np.ndarray] = None,
) -> Extremum:
    """
        Supremum of objective over the unit cube [0, 1]^k.
        The objective may return nan for inadmissible points, those are skipped.
        Optional first rows are evaluated before the Halton design.
        Every running-maximum record of the design is refined with its own stream, so a longer
        design never reports a smaller value than a shorter one.
        :raises EmptySearchError:
    """
    on_empty("pair design", pairs.count)
    design = halton_points(k, pairs.count, rng)
    entropy = int(rng.integers(2 ** 63))
    if first is not None:
        design = np.vstack([np.atleast_2d(first), design])
    values = np.asarray(objective(design), dtype=float)
    if np.all(np.isnan(values)):
        on_empty("admissible pairs in the design", 0)

    best_value, best_point = -math.inf, None
    records = _records(values)
    for i in records:
        value, point = _refine(objective, k, pairs, design[i].copy(), float(values[i]),
                               np.random.default_rng([entropy, int(i)]))
        if value > best_value:
            best_value, best_point = value, point
    logger.debug("refined %d records: supremum %.6e", len(records), best_value)
    return Extremum(value=best_value, point=tuple(best_point.tolist()))
