"""Manufactured solutions, error norms and convergence studies."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .fractional_time import TimeGrid
from .scheme import ScalarProblem, run_scalar
from .spatial import Boundary, SpaceGrid, discrete_l2

__all__ = [
    "ManufacturedCase",
    "sine_dirichlet_case",
    "cosine_neumann_case",
    "quadratic_dirichlet_case",
    "linear_time_case",
    "error_at_T",
    "ConvergenceRow",
    "ConvergenceReport",
    "observed_rates",
    "solve_case",
    "temporal_study",
    "spatial_study",
]


def shifted_inverse(u):
    """The reaction ``1 / (u + 4)`` used by the trigonometric cases."""
    return 1.0 / (u + 4.0)


@dataclass(frozen=True)
class ManufacturedCase:
    """An exact solution paired with the source that makes it solve the PDE.

    ``caputo`` and ``exact_xx`` are the closed-form time and space derivatives
    of ``exact``; they are only used to audit ``source``.
    """

    label: str
    bc: Boundary
    exact: Callable
    source: Callable
    reaction: Callable
    caputo: Callable
    exact_xx: Callable
    alpha: float

    def initial(self, x):
        return self.exact(x, 0.0)

    def residual(self, x, t):
        """``D^alpha u - u_xx - f(u) - g`` at the given points; zero up to rounding."""
        u = self.exact(x, t)
        return self.caputo(x, t) - self.exact_xx(x, t) - self.reaction(u) - self.source(x, t)

    def problem(self, M, N, T=1.0, source_time="new") -> ScalarProblem:
        return ScalarProblem(
            alpha=self.alpha,
            grid=SpaceGrid(M),
            time=TimeGrid(T, N),
            initial=self.initial,
            bc=self.bc,
            reaction=self.reaction,
            source=self.source,
            source_time=source_time,
        )


def _t2_mode_case(alpha, label, bc, mode):
    k2 = (2.0 * math.pi) ** 2
    gcoef = 2.0 / math.gamma(3.0 - alpha)

    def exact(x, t):
        return t * t * mode(2.0 * math.pi * np.asarray(x, dtype=float))

    def caputo(x, t):
        return gcoef * t ** (2.0 - alpha) * mode(2.0 * math.pi * np.asarray(x, dtype=float))

    def exact_xx(x, t):
        return -k2 * exact(x, t)

    def source(x, t):
        s = mode(2.0 * math.pi * np.asarray(x, dtype=float))
        return gcoef * t ** (2.0 - alpha) * s + k2 * t * t * s - 1.0 / (t * t * s + 4.0)

    return ManufacturedCase(label, bc, exact, source, shifted_inverse, caputo, exact_xx, alpha)


def sine_dirichlet_case(alpha) -> ManufacturedCase:
    """``u = t^2 sin(2 pi x)`` with ``f(u) = 1/(u+4)`` and homogeneous Dirichlet data."""
    return _t2_mode_case(alpha, "sine-dirichlet", Boundary.DIRICHLET, np.sin)


def cosine_neumann_case(alpha) -> ManufacturedCase:
    """``u = t^2 cos(2 pi x)`` with ``f(u) = 1/(u+4)`` and homogeneous Neumann data."""
    return _t2_mode_case(alpha, "cosine-neumann", Boundary.NEUMANN, np.cos)


def quadratic_dirichlet_case(alpha) -> ManufacturedCase:
    # u = t^2 x (1 - x): the three-point stencil is exact in space
    gcoef = 2.0 / math.gamma(3.0 - alpha)

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        return t * t * x * (1.0 - x)

    def caputo(x, t):
        x = np.asarray(x, dtype=float)
        return gcoef * t ** (2.0 - alpha) * x * (1.0 - x)

    def exact_xx(x, t):
        return -2.0 * t * t * np.ones_like(np.asarray(x, dtype=float))

    def source(x, t):
        return caputo(x, t) - exact_xx(x, t)

    return ManufacturedCase("quadratic-dirichlet", Boundary.DIRICHLET, exact, source, _zero, caputo, exact_xx, alpha)


def linear_time_case(alpha) -> ManufacturedCase:
    # u = t x (1 - x): L1 is exact for linear t, the stencil for quadratic x,
    # so the scheme reproduces u up to rounding
    gcoef = 1.0 / math.gamma(2.0 - alpha)

    def exact(x, t):
        x = np.asarray(x, dtype=float)
        return t * x * (1.0 - x)

    def caputo(x, t):
        x = np.asarray(x, dtype=float)
        return gcoef * t ** (1.0 - alpha) * x * (1.0 - x)

    def exact_xx(x, t):
        return -2.0 * t * np.ones_like(np.asarray(x, dtype=float))

    def source(x, t):
        return caputo(x, t) - exact_xx(x, t)

    return ManufacturedCase("linear-time-dirichlet", Boundary.DIRICHLET, exact, source, _zero, caputo, exact_xx, alpha)


def _zero(u):
    return np.zeros_like(np.asarray(u, dtype=float))


def error_at_T(numerical, case: ManufacturedCase, grid: SpaceGrid, T):
    """Return ``(linf, l2)`` of ``numerical - exact(x, T)`` over all nodes."""
    U = np.asarray(numerical, dtype=float)
    if U.shape != (grid.size,):
        raise ValueError(f"numerical field has shape {U.shape}, grid expects ({grid.size},)")
    err = U - case.exact(grid.nodes, T)
    return float(np.max(np.abs(err))), discrete_l2(err, grid.h)


@dataclass
class ConvergenceRow:
    tau: float
    h: float
    error: float
    l2_error: float
    rate: Optional[float] = None
    failure: Optional[str] = None


@dataclass
class ConvergenceReport:
    label: str
    alpha: float
    refined: str  # "tau" or "h"
    rows: List[ConvergenceRow] = field(default_factory=list)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.error for r in self.rows])

    @property
    def rates(self) -> List[Optional[float]]:
        return [r.rate for r in self.rows]


# errors at or below this are rounding noise and carry no rate
ROUNDING_FLOOR = 1e-13


def observed_rates(errors, steps=None, floor=ROUNDING_FLOOR) -> List[Optional[float]]:
    """``log(e_k / e_{k+1}) / log(s_k / s_{k+1})``; ``None`` on the first row.

    ``steps`` defaults to successive halving, which reduces to ``log2`` of the
    error ratio. A rate is ``None`` when either error is at or below ``floor``.
    """
    e = [float(v) for v in errors]
    out: List[Optional[float]] = [None]
    for k in range(1, len(e)):
        if not (e[k - 1] > floor and e[k] > floor):
            out.append(None)
            continue
        ratio = math.log(2.0) if steps is None else math.log(steps[k - 1] / steps[k])
        out.append(math.log(e[k - 1] / e[k]) / ratio)
    return out


def solve_case(case: ManufacturedCase, M, N, T=1.0, source_time="new"):
    """Final field and ``(linf, l2)`` error for one grid pair."""
    problem = case.problem(M, N, T, source_time)
    final = run_scalar(problem, record="final").final
    linf, l2 = error_at_T(final, case, problem.grid, T)
    return final, linf, l2


def _run_rows(case, pairs, T, source_time, workers):
    def job(pair):
        M, N = pair
        try:
            _, linf, l2 = solve_case(case, M, N, T, source_time)
            return ConvergenceRow(T / N, 1.0 / M, linf, l2)
        except Exception as exc:  # annotate the row, keep the study going
            return ConvergenceRow(T / N, 1.0 / M, math.nan, math.nan, failure=f"{type(exc).__name__}: {exc}")

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, pairs))
    return [job(p) for p in pairs]


def _fill_rates(rows, steps):
    errs = [r.error if r.failure is None else math.nan for r in rows]
    for row, rate in zip(rows, observed_rates(errs, steps)):
        row.rate = rate


def _grid_count(length, step, what):
    count = length / step
    n = int(round(count))
    if n < 1 or abs(count - n) > 1e-9 * max(1.0, count):
        raise ValueError(f"{what}={step!r} does not divide the interval of length {length!r}")
    return n


def temporal_study(
    case: ManufacturedCase,
    h,
    taus: Sequence[float],
    T=1.0,
    source_time="new",
    workers=None,
) -> ConvergenceReport:
    """Refine ``tau`` at fixed ``h``; rates come from successive ``tau`` ratios."""
    taus = [float(t) for t in taus]
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise ValueError("taus must be strictly decreasing")
    M = _grid_count(1.0, h, "h")
    pairs = [(M, _grid_count(T, tau, "tau")) for tau in taus]
    rows = _run_rows(case, pairs, T, source_time, workers)
    _fill_rates(rows, taus)
    return ConvergenceReport(case.label, case.alpha, "tau", rows)


def spatial_study(
    case: ManufacturedCase,
    hs: Sequence[float],
    tau_factor=1.0,
    T=1.0,
    source_time="new",
    workers=None,
) -> ConvergenceReport:
    """Refine ``h`` with ``tau = tau_factor * h**2`` so both error terms shrink alike."""
    hs = [float(h) for h in hs]
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ValueError("hs must be strictly decreasing")
    pairs = []
    for h in hs:
        M = _grid_count(1.0, h, "h")
        pairs.append((M, max(1, int(math.ceil(T / (tau_factor * h * h) - 1e-9)))))
    rows = _run_rows(case, pairs, T, source_time, workers)
    _fill_rates(rows, hs)
    return ConvergenceReport(case.label, case.alpha, "h", rows)
