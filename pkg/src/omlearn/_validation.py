"""Small input-validation helpers in the spirit of ``sklearn.utils.validation``."""

import math
import numbers

import numpy as np

from .exceptions import NumericError, ParameterError


def check_positive(value, name, *, strict=True):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    if strict and value <= 0:
        raise ParameterError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ParameterError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_positive_int(value, name):
    if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < 1:
        raise ParameterError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_unit_interval(value, name):
    value = check_positive(value, name)
    if value >= 1:
        raise ParameterError(f"{name} must lie in (0, 1), got {value!r}")
    return value


def check_vector(w, name="w", *, dim=None):
    """Return ``w`` as a finite 1-d float array, optionally of length ``dim``."""
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1:
        raise ParameterError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ParameterError(f"{name} must have length {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ParameterError(f"cannot build a random generator from {seed!r}")
