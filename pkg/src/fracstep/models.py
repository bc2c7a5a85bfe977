"""Subdiffusive Michaelis-Menten-Holling predator-prey system.

Prey ``N`` and predator ``P`` obey::

    D_t^alpha N = d1 N_xx + N (1 - N - a P / (P + N))
    D_t^alpha P = d2 P_xx + sigma P (-(gamma + delta beta P) / (1 + beta P) + N / (P + N))

Both species share the L1 weights and ``C_alpha``; the reactions are taken at
the old level, so a step is two independent tridiagonal solves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from ._validation import FracstepError, NonFiniteError, check_alpha, check_positive
from .fractional_time import (
    L1Weights,
    SolutionHistory,
    TimeGrid,
    compute_weights,
    memory_coefficients,
    step_coefficient,
)
from .scheme import implicit_solve, record_steps
from .spatial import Boundary, SpaceGrid, TridiagonalSystem, assemble_system

__all__ = [
    "PredatorPreyParams",
    "reaction_f",
    "reaction_g",
    "ConstraintReport",
    "ConstraintWarning",
    "check_constraints",
    "equilibrium_solve",
    "EquilibriumError",
    "SystemState",
    "step_system",
    "Violation",
    "BoundsMonitor",
    "monitor_bounds",
    "PredatorPreyRun",
    "run_system",
    "cosine_perturbation",
]

# below this N + P the ratio terms are defined as 0, keeping (0, 0) a fixed point
RATIO_GUARD = 1e-14


@dataclass(frozen=True)
class PredatorPreyParams:
    a: float = 1.1
    sigma: float = 1.0
    gamma: float = 0.05
    delta: float = 0.5
    beta: float = 1.0
    d1: float = 0.005
    d2: float = 0.2

    def __post_init__(self):
        for name in ("a", "sigma", "beta", "d1", "d2"):
            check_positive(name, getattr(self, name))
        if not (0.0 < self.gamma <= self.delta):
            raise ValueError(f"need 0 < gamma <= delta, got gamma={self.gamma}, delta={self.delta}")

    @property
    def predator_ceiling(self) -> float:
        return 1.0 / self.gamma


def _ratio(num, N, P):
    s = N + P
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(np.abs(s) < RATIO_GUARD, 0.0, num / np.where(s == 0, 1.0, s))
    return r


def _check_inputs(N, P):
    N = np.asarray(N, dtype=float)
    P = np.asarray(P, dtype=float)
    if not (np.all(np.isfinite(N)) and np.all(np.isfinite(P))):
        raise ValueError("reaction terms need finite N and P")
    return N, P


def reaction_f(N, P, params: PredatorPreyParams):
    """Prey growth ``N (1 - N - a P / (P + N))``."""
    N, P = _check_inputs(N, P)
    out = N * (1.0 - N - params.a * _ratio(P, N, P))
    return out if out.ndim else float(out)


def reaction_g(N, P, params: PredatorPreyParams):
    """Predator growth ``sigma P (-(gamma + delta beta P)/(1 + beta P) + N/(P + N))``."""
    N, P = _check_inputs(N, P)
    death = (params.gamma + params.delta * params.beta * P) / (1.0 + params.beta * P)
    out = params.sigma * P * (-death + _ratio(N, N, P))
    return out if out.ndim else float(out)


class ConstraintWarning(UserWarning):
    """A sufficient positivity/boundedness step-size condition fails."""


@dataclass(frozen=True)
class ConstraintReport:
    """Step-size conditions under which the discrete solution stays in bounds.

    ``C_alpha`` must satisfy ``C_alpha <= 1``,
    ``C_alpha < min((1 - b1) / a, (1 - b1) / 2)`` and
    ``C_alpha < (1 - b1) / (sigma * delta)``.
    """

    C_alpha: float
    b1: float
    bound_N: float
    bound_P: float
    bound_unit: float = 1.0

    @property
    def unit_ok(self) -> bool:
        return self.C_alpha <= self.bound_unit

    @property
    def prey_ok(self) -> bool:
        return self.C_alpha < self.bound_N

    @property
    def predator_ok(self) -> bool:
        return self.C_alpha < self.bound_P

    @property
    def satisfied(self) -> bool:
        return self.unit_ok and self.prey_ok and self.predator_ok

    def failures(self) -> List[str]:
        out = []
        if not self.unit_ok:
            out.append(f"C_alpha={self.C_alpha:.6g} > 1")
        if not self.prey_ok:
            out.append(f"C_alpha={self.C_alpha:.6g} >= prey bound {self.bound_N:.6g}")
        if not self.predator_ok:
            out.append(f"C_alpha={self.C_alpha:.6g} >= predator bound {self.bound_P:.6g}")
        return out

    def as_dict(self) -> dict:
        return {
            "C_alpha": self.C_alpha,
            "b1": self.b1,
            "bound_N": self.bound_N,
            "bound_P": self.bound_P,
            "bound_unit": self.bound_unit,
            "unit_ok": self.unit_ok,
            "prey_ok": self.prey_ok,
            "predator_ok": self.predator_ok,
            "satisfied": self.satisfied,
        }


def check_constraints(params: PredatorPreyParams, alpha, tau) -> ConstraintReport:
    C = step_coefficient(alpha, tau)
    b1 = 2.0 ** (1.0 - alpha) - 1.0
    gap = 1.0 - b1
    return ConstraintReport(
        C_alpha=C,
        b1=b1,
        bound_N=min(gap / params.a, gap / 2.0),
        bound_P=gap / (params.sigma * params.delta),
    )


class EquilibriumError(FracstepError):
    def __init__(self, message, iterate, residual):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


def _jacobian(N, P, p: PredatorPreyParams):
    s = N + P
    dfdN = 1.0 - 2.0 * N - p.a * P**2 / s**2
    dfdP = -p.a * N**2 / s**2
    death = (p.gamma + p.delta * p.beta * P) / (1.0 + p.beta * P)
    ddeath = p.beta * (p.delta - p.gamma) / (1.0 + p.beta * P) ** 2
    dgdN = p.sigma * P**2 / s**2
    dgdP = p.sigma * (-death + N / s) + p.sigma * P * (-ddeath - N / s**2)
    return np.array([[dfdN, dfdP], [dgdN, dgdP]])


def equilibrium_solve(params: PredatorPreyParams, start=(0.1, 0.5), tol=1e-12, max_iter=100):
    """Positive root of ``f = g = 0`` by damped Newton iteration.

    The step is halved until the residual decreases. Raises
    :class:`EquilibriumError` carrying the last iterate if ``max_iter`` is hit.
    """
    x = np.array(start, dtype=float)

    def residual(v):
        return np.array([reaction_f(v[0], v[1], params), reaction_g(v[0], v[1], params)])

    r = residual(x)
    for _ in range(max_iter):
        norm = np.max(np.abs(r))
        if norm < tol:
            return float(x[0]), float(x[1])
        dx = np.linalg.solve(_jacobian(x[0], x[1], params), -r)
        lam = 1.0
        while lam > 1e-10:
            trial = x + lam * dx
            if np.all(trial > 0):
                r_trial = residual(trial)
                if np.max(np.abs(r_trial)) < norm:
                    break
            lam *= 0.5
        else:
            break
        x, r = trial, r_trial
    norm = float(np.max(np.abs(r)))
    if norm < tol:
        return float(x[0]), float(x[1])
    raise EquilibriumError(f"Newton iteration stalled with residual {norm:.3e}", tuple(x), norm)


class Violation(NamedTuple):
    step: int
    node: int
    species: str
    value: float


@dataclass
class BoundsMonitor:
    """Records every node where ``0 < N <= 1`` or ``0 < P <= L1`` fails.

    Dirichlet boundary nodes are pinned to zero, so there only ``value >= -tol_pos``
    is required. ``upper_tol`` absorbs rounding above the ceilings.
    """

    L1: float
    bc: Boundary = Boundary.NEUMANN
    tol_pos: float = 1e-14
    upper_tol: float = 1e-12
    log: List[Violation] = field(default_factory=list)

    def __post_init__(self):
        self.bc = Boundary.coerce(self.bc)

    @classmethod
    def for_initial(cls, params: PredatorPreyParams, P0, bc=Boundary.NEUMANN, **kw) -> "BoundsMonitor":
        L1 = max(params.predator_ceiling, float(np.max(P0)))
        return cls(L1=L1, bc=bc, **kw)

    @property
    def count(self) -> int:
        return len(self.log)

    def _scan(self, step, values, species, upper):
        v = np.asarray(values, dtype=float)
        low_bad = v <= 0.0
        if self.bc is Boundary.DIRICHLET:
            low_bad[0] = v[0] < -self.tol_pos
            low_bad[-1] = v[-1] < -self.tol_pos
        bad = low_bad | (v > upper * (1.0 + self.upper_tol)) | ~np.isfinite(v)
        return [Violation(step, int(i), species, float(v[i])) for i in np.flatnonzero(bad)]

    def check(self, step, N, P) -> List[Violation]:
        new = self._scan(step, N, "N", 1.0) + self._scan(step, P, "P", self.L1)
        self.log.extend(new)
        return new


def monitor_bounds(state: "SystemState", monitor: BoundsMonitor) -> BoundsMonitor:
    """Scan the newest level of ``state`` and append violations to ``monitor``."""
    monitor.check(state.n, state.N_history.latest, state.P_history.latest)
    return monitor


@dataclass
class SystemState:
    N_history: SolutionHistory
    P_history: SolutionHistory
    weights: L1Weights
    C_alpha: float
    system_N: TridiagonalSystem
    system_P: TridiagonalSystem
    tau: float

    @classmethod
    def start(cls, params, alpha, grid: SpaceGrid, time: TimeGrid, N0, P0, bc=Boundary.NEUMANN):
        alpha = check_alpha(alpha)
        bc = Boundary.coerce(bc)
        fields = []
        for name, v in (("N0", N0), ("P0", P0)):
            v = v(grid.nodes) if callable(v) else v
            v = np.array(np.broadcast_to(np.asarray(v, dtype=float), (grid.size,)))
            if bc is Boundary.DIRICHLET:
                v[0] = v[-1] = 0.0
            fields.append(v)
        Nh = SolutionHistory(grid.size, time.N + 1)
        Ph = SolutionHistory(grid.size, time.N + 1)
        Nh.append(fields[0])
        Ph.append(fields[1])
        C = step_coefficient(alpha, time.tau)
        return cls(
            N_history=Nh,
            P_history=Ph,
            weights=compute_weights(alpha, time.N),
            C_alpha=C,
            system_N=assemble_system(grid, C * params.d1, bc),
            system_P=assemble_system(grid, C * params.d2, bc),
            tau=time.tau,
        )

    @property
    def n(self) -> int:
        return len(self.N_history) - 1


def step_system(state: SystemState, params: PredatorPreyParams, bc=Boundary.NEUMANN):
    """One coupled step; returns ``(N^{n+1}, P^{n+1})`` and appends them to ``state``."""
    bc = Boundary.coerce(bc)
    n = state.n
    C = state.C_alpha
    coef = memory_coefficients(state.weights, n)
    N_n = state.N_history.latest
    P_n = state.P_history.latest
    rhs_N = coef @ state.N_history.levels + C * reaction_f(N_n, P_n, params)
    rhs_P = coef @ state.P_history.levels + C * reaction_g(N_n, P_n, params)
    N_new = implicit_solve(state.system_N, rhs_N, bc)
    P_new = implicit_solve(state.system_P, rhs_P, bc)
    for name, v in (("N", N_new), ("P", P_new)):
        bad = np.flatnonzero(~np.isfinite(v))
        if bad.size:
            raise NonFiniteError(f"non-finite {name} at step {n + 1}, node {bad[0]}", step=n + 1, node=int(bad[0]))
    state.N_history.append(N_new)
    state.P_history.append(P_new)
    return N_new, P_new


def cosine_perturbation(center, amplitude):
    """``center + amplitude * cos(pi x)``, the standard perturbed-equilibrium start."""

    def init(x):
        return center + amplitude * np.cos(np.pi * x)

    return init


@dataclass
class PredatorPreyRun:
    times: np.ndarray
    N: np.ndarray
    P: np.ndarray
    monitor: BoundsMonitor
    constraints: ConstraintReport
    state: SystemState = field(repr=False)


def run_system(
    params: PredatorPreyParams,
    alpha,
    grid: SpaceGrid,
    time: TimeGrid,
    N0,
    P0,
    bc=Boundary.NEUMANN,
    record="all",
    strict_constraints=False,
    monitor: Optional[BoundsMonitor] = None,
) -> PredatorPreyRun:
    """Integrate the system to ``time.T`` with the bounds monitor active at every level.

    Failing step-size conditions raise in ``strict_constraints`` mode and only
    warn otherwise.
    """
    bc = Boundary.coerce(bc)
    report = check_constraints(params, alpha, time.tau)
    if not report.satisfied:
        msg = "positivity step-size conditions fail: " + "; ".join(report.failures())
        if strict_constraints:
            raise FracstepError(msg)
        warnings.warn(msg, ConstraintWarning, stacklevel=2)
    state = SystemState.start(params, alpha, grid, time, N0, P0, bc)
    if monitor is None:
        monitor = BoundsMonitor.for_initial(params, state.P_history.latest, bc)
    monitor_bounds(state, monitor)
    for _ in range(time.N):
        step_system(state, params, bc)
        monitor_bounds(state, monitor)
    steps = sorted(record_steps(record, time.N))
    return PredatorPreyRun(
        times=np.array(steps) * time.tau,
        N=np.array(state.N_history.levels[steps]),
        P=np.array(state.P_history.levels[steps]),
        monitor=monitor,
        constraints=report,
        state=state,
    )
