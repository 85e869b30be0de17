"""Input validation helpers shared by learners and the harness."""
from __future__ import annotations

import numbers
from fractions import Fraction

import numpy as np

from .exceptions import InvalidInputError


def is_scalar_input(x) -> bool:
    return np.ndim(x) == 0


def is_exact_scalar(x) -> bool:
    return isinstance(x, (float, Fraction))


def check_input(x):
    """Canonicalize one input point.

    Scalars become Python floats, except ``Fraction`` inputs which stay exact;
    vectors become 1-d float arrays.
    """
    if isinstance(x, Fraction):
        return x
    if is_scalar_input(x):
        if isinstance(x, bool) or not isinstance(x, numbers.Real):
            raise InvalidInputError(f"input point {x!r} is not a real number")
        return float(x)
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"input point must be a scalar or 1-d vector, got shape {arr.shape}")
    return arr


def check_stream(X, y=None):
    """Validate a batch of sequential inputs (and labels) of equal length."""
    if is_scalar_input(X):
        raise InvalidInputError("expected a sequence of input points")
    X = [check_input(x) for x in X]
    if y is None:
        return X
    y = list(y)
    if len(y) != len(X):
        raise InvalidInputError(f"X has {len(X)} points but y has {len(y)} labels")
    return X, y


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise InvalidInputError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def input_key(x):
    """Hashable key for exact-match lookups."""
    if is_exact_scalar(x):
        return x
    return tuple(np.asarray(x, dtype=float).ravel().tolist())
