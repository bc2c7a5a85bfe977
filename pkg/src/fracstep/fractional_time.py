"""L1 discretisation of the Caputo time derivative of order 0 < alpha < 1.

On a uniform grid t_j = j*tau the L1 approximation at t_n reads::

    D u^n = tau**(-alpha) / Gamma(2 - alpha) * (u^n - H^{n-1})

with the memory term::

    H^m = sum_{j=0}^{m-1} (b_j - b_{j+1}) u^{m-j} + b_m u^0,
    b_j = (j + 1)**(1 - alpha) - j**(1 - alpha).

Every past level enters ``H``, so the full history is kept in memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_alpha, check_finite, check_nonnegative_int, check_positive

__all__ = [
    "L1Weights",
    "TimeGrid",
    "SolutionHistory",
    "compute_weights",
    "memory_coefficients",
    "history_combination",
    "discrete_caputo",
    "step_coefficient",
]


@dataclass(frozen=True)
class L1Weights:
    """Weights ``b[0..n]`` of the L1 scheme for a fixed order ``alpha``."""

    alpha: float
    b: np.ndarray

    def __post_init__(self):
        self.b.setflags(write=False)

    def __len__(self):
        return len(self.b)

    @property
    def n(self) -> int:
        return len(self.b) - 1


def compute_weights(alpha, n) -> L1Weights:
    """Return ``b_j = (j+1)^(1-alpha) - j^(1-alpha)`` for ``j = 0..n``.

    The difference is evaluated as ``j^(1-alpha) * expm1((1-alpha) * log1p(1/j))``
    which avoids the cancellation of the naive form for large ``j``.
    """
    alpha = check_alpha(alpha)
    n = check_nonnegative_int("n", n)
    b = np.empty(n + 1)
    b[0] = 1.0
    if n:
        j = np.arange(1, n + 1, dtype=float)
        p = 1.0 - alpha
        b[1:] = j**p * np.expm1(p * np.log1p(1.0 / j))
    return L1Weights(alpha, b)


def step_coefficient(alpha, tau) -> float:
    """``C_alpha = Gamma(2 - alpha) * tau**alpha``, the scaled step of the scheme."""
    alpha = check_alpha(alpha)
    tau = check_positive("tau", tau)
    return math.gamma(2.0 - alpha) * tau**alpha


def memory_coefficients(weights: L1Weights, n) -> np.ndarray:
    """Coefficients ``c`` with ``H^n = sum_k c[k] * u^k`` over levels ``k = 0..n``."""
    n = check_nonnegative_int("n", n)
    if len(weights) < n + 1:
        raise ValueError(f"need at least {n + 1} weights, got {len(weights)}")
    b = weights.b
    c = np.empty(n + 1)
    c[0] = b[n]
    # level k carries b_{n-k} - b_{n-k+1}
    c[1:] = (b[:n] - b[1 : n + 1])[::-1]
    return c


@dataclass(frozen=True)
class TimeGrid:
    T: float
    N: int

    def __post_init__(self):
        check_positive("T", self.T)
        if check_nonnegative_int("N", self.N) < 1:
            raise ValueError("N must be a positive integer")

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.tau

    def t(self, j) -> float:
        return j * self.tau


class SolutionHistory:
    """Dense, append-only store of solution levels ``u^0, u^1, ...``.

    Storage is preallocated for ``capacity`` levels of ``size`` nodes so the
    memory term is a single matrix-vector product over ``levels``.
    """

    def __init__(self, size, capacity):
        self._buf = np.empty((int(capacity), int(size)))
        self._len = 0

    @classmethod
    def from_levels(cls, levels):
        levels = check_finite(np.atleast_2d(np.asarray(levels, dtype=float)), "history")
        hist = cls(levels.shape[1], levels.shape[0])
        hist._buf[:] = levels
        hist._len = levels.shape[0]
        return hist

    def __len__(self):
        return self._len

    def __getitem__(self, j):
        return self.levels[j]

    @property
    def size(self) -> int:
        return self._buf.shape[1]

    @property
    def levels(self) -> np.ndarray:
        view = self._buf[: self._len]
        view.flags.writeable = False
        return view

    @property
    def latest(self) -> np.ndarray:
        return self.levels[-1]

    def append(self, values):
        values = check_finite(values, "history level", step=self._len)
        if values.shape != (self.size,):
            raise ValueError(f"level has shape {values.shape}, expected ({self.size},)")
        if self._len == self._buf.shape[0]:
            grown = np.empty((max(1, 2 * self._len), self.size))
            grown[: self._len] = self._buf
            self._buf = grown
        self._buf[self._len] = values
        self._len += 1


def _as_levels(history) -> np.ndarray:
    if isinstance(history, SolutionHistory):
        return history.levels
    return np.asarray(history, dtype=float)


def history_combination(history, weights: L1Weights, n) -> np.ndarray:
    """Memory term ``H^n`` from levels ``0..n`` of ``history``.

    ``history`` is a :class:`SolutionHistory` or an array whose first axis
    indexes time levels; extra levels beyond ``n`` are ignored.
    """
    levels = _as_levels(history)
    n = check_nonnegative_int("n", n)
    if levels.shape[0] < n + 1:
        raise ValueError(f"history holds {levels.shape[0]} levels, need {n + 1}")
    used = check_finite(levels[: n + 1], "history")
    return memory_coefficients(weights, n) @ used


def discrete_caputo(history, weights: L1Weights, tau, n):
    """L1 approximation of the Caputo derivative at ``t_n`` (``n >= 1``).

    Works nodewise: ``history`` may hold scalars or whole fields per level.
    The result is exact, up to rounding, for data linear in ``t``.
    """
    n = check_nonnegative_int("n", n)
    if n < 1:
        raise ValueError("discrete Caputo derivative needs n >= 1")
    levels = _as_levels(history)
    if levels.shape[0] < n + 1:
        raise ValueError(f"history holds {levels.shape[0]} levels, need {n + 1}")
    memory = history_combination(levels, weights, n - 1)
    return (levels[n] - memory) / step_coefficient(weights.alpha, tau)
