import math
from collections.abc import Callable

import numpy as np

from brenierlab.common.exceptions import (
    ContractError,
    DimensionMismatchError,
    DomainError,
    ParameterRangeError,
    EmptySearchError,
)


def extract_name(func) -> str:
    return getattr(func, "__qualname__", getattr(func, "__name__", f"{func}"))


def on_dimension_mismatch(x, dimension: int) -> np.ndarray:
    """
       Converts a point (or a batch of points in rows) to an array and checks its last axis.
       :raises DimensionMismatchError:
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != dimension:
        raise DimensionMismatchError(dimension, arr.shape[-1])
    return arr


def on_outside_interval(name: str, value: float, lo: float, hi: float, closed: bool = True):
    """
       Panic when a scalar leaves [lo, hi] (or (lo, hi) when not closed).
       :raises DomainError:
    """
    arr = np.asarray(value, dtype=float)
    if closed:
        bad = np.any((arr < lo) | (arr > hi) | np.isnan(arr))
        domain = f"[{lo}, {hi}]"
    else:
        bad = np.any((arr <= lo) | (arr >= hi) | np.isnan(arr))
        domain = f"({lo}, {hi})"
    if bad:
        raise DomainError(name, value, domain)


def on_non_positive(name: str, value: float):
    """
       Panic when a quantity that must be strictly positive is not.
       :raises ParameterRangeError:
    """
    if not (value > 0 and math.isfinite(value)):
        raise ParameterRangeError(name, value, "a positive finite number")


def on_bad_exponents(p: float, q: float):
    """
       Panic when the growth exponents violate 0 <= p <= 1 <= q.
       :raises ParameterRangeError:
    """
    if not 0 <= p <= 1:
        raise ParameterRangeError("p", p, "0 <= p <= 1")
    if q < 1:
        raise ParameterRangeError("q", q, "q >= 1")


def on_envelope_exponent(p: float):
    """
       Panic when the envelope exponent is not above -1.
       :raises ParameterRangeError:
    """
    if not p > -1:
        raise ParameterRangeError("p", p, "p > -1")


def on_empty(what: str, size: int):
    """
       Panic when there is nothing to search over.
       :raises EmptySearchError:
    """
    if size <= 0:
        raise EmptySearchError(what)


def on_unit_vector(h) -> np.ndarray:
    """
       :raises DomainError: the direction is not of unit Euclidean length
    """
    arr = np.asarray(h, dtype=float).reshape(-1)
    if abs(np.linalg.norm(arr) - 1.0) > 1e-9:
        raise DomainError("h", tuple(arr), "the unit sphere")
    return arr


def on_not_callable(fn: Callable, entity: str, method: str):
    """
       Panic when the lazy pipeline receives something that can not be called.
       :raises ContractError:
    """
    if not callable(fn):
        raise ContractError(entity, method, f"'{extract_name(fn)}' is not callable")
