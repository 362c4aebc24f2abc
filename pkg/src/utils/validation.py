"""
Validation utility functions
"""
from typing import Sequence

import numpy as np


def validate_positive(name: str, value: float, error: type = ValueError) -> None:
    """
    Validate that a scalar argument is strictly positive and finite.

    Args:
        name: Argument name used in the error message
        value: Value to check
        error: Exception class to raise

    Raises:
        error: if value is not a finite number > 0
    """
    if not np.isfinite(value) or value <= 0:
        raise error(f"{name} must be a positive finite number, got {value!r}")


def validate_nonnegative(name: str, value: float, error: type = ValueError) -> None:
    """
    Validate that a scalar argument is >= 0 and finite.

    Raises:
        error: if value is negative or not finite
    """
    if not np.isfinite(value) or value < 0:
        raise error(f"{name} must be a nonnegative finite number, got {value!r}")


def validate_increasing(name: str, values: Sequence[float], min_length: int = 1, error: type = ValueError) -> None:
    """
    Validate that a sequence is strictly increasing and long enough.

    Raises:
        error: if the sequence is too short or not strictly increasing
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < min_length:
        raise error(f"{name} needs at least {min_length} values, got {arr.size}")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise error(f"{name} must be strictly increasing: {arr.tolist()}")


def validate_choice(name: str, value: str, allowed: Sequence[str], error: type = ValueError) -> None:
    """
    Validate that a string is one of the allowed values.

    Raises:
        error: if value is not in allowed
    """
    if value not in allowed:
        raise error(f"Invalid {name} {value!r}. Must be one of: {', '.join(allowed)}")
