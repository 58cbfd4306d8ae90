"""Small input-validation helpers shared by the estimators and functions."""
from __future__ import annotations

import math
from numbers import Integral, Real

import numpy as np


def check_int(value, name: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_power_of_two(value, name: str, minimum: int = 1) -> int:
    value = check_int(value, name, minimum)
    if value & (value - 1):
        raise ValueError(f"{name} must be a power of two, got {value}")
    return value


def check_real(value, name: str, low: float | None = None, high: float | None = None,
               strict_low: bool = False, allow_inf: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if math.isnan(value) or (math.isinf(value) and not allow_inf):
        raise ValueError(f"{name} must be finite, got {value}")
    if low is not None and (value < low or (strict_low and value == low)):
        op = ">" if strict_low else ">="
        raise ValueError(f"{name} must be {op} {low}, got {value}")
    if high is not None and value > high:
        raise ValueError(f"{name} must be <= {high}, got {value}")
    return value


def check_exponent(value, name: str) -> float:
    """Lebesgue-type exponent in [1, inf]."""
    return check_real(value, name, low=1.0, allow_inf=True)


def check_finite_array(values, name: str, dtype=None) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_shape(arr: np.ndarray, shape: tuple, name: str) -> np.ndarray:
    if tuple(arr.shape) != tuple(shape):
        raise ValueError(f"{name} has shape {arr.shape}, expected {tuple(shape)}")
    return arr


def check_same(a, b, what: str) -> None:
    if a != b:
        raise ValueError(f"{what} mismatch: {a!r} != {b!r}")
