"""Small input checks shared by the solver modules."""

from __future__ import annotations

import math

import numpy as np


class FracstepError(Exception):
    """Base class for errors raised by this package."""


class NonFiniteError(FracstepError, FloatingPointError):
    """A non-finite value appeared in a field.

    ``step`` and ``node`` locate the first offending entry when known.
    """

    def __init__(self, message, step=None, node=None):
        super().__init__(message)
        self.step = step
        self.node = node


class SolverFault(FracstepError):
    """The tridiagonal elimination hit a zero pivot."""


def check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"fractional order alpha must satisfy 0 < alpha < 1, got {alpha!r}")
    return alpha


def check_positive(name: str, value) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_nonnegative_int(name: str, value) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 0:
        raise ValueError(f"{name} must be >= 0, got {value}")
    return value


def check_finite(values, what="field", step=None) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    bad = ~np.isfinite(arr)
    if bad.any():
        flat = np.flatnonzero(bad.reshape(arr.shape[0], -1).any(axis=1)) if arr.ndim > 1 else np.flatnonzero(bad)
        idx = int(flat[0])
        where = f" at step {step}" if step is not None else ""
        raise NonFiniteError(f"non-finite value in {what}{where}, index {idx}", step=step, node=idx)
    return arr
