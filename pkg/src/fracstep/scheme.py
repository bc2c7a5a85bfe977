"""Semi-implicit L1 stepping for the scalar subdiffusive reaction-diffusion equation.

Each step solves::

    (I - C_alpha * d * delta_x^2) U^{n+1} = H^n + C_alpha * f(U^n) + C_alpha * g(x, t*)

with ``C_alpha = Gamma(2 - alpha) * tau**alpha``: diffusion implicit, reaction
explicit, and ``t*`` either ``t_{n+1}`` (default) or ``t_n`` for the optional
source ``g``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._validation import NonFiniteError, check_alpha, check_positive
from .fractional_time import (
    L1Weights,
    SolutionHistory,
    TimeGrid,
    compute_weights,
    memory_coefficients,
    step_coefficient,
)
from .spatial import Boundary, SpaceGrid, TridiagonalSystem, assemble_system, thomas_solve

__all__ = [
    "ScalarProblem",
    "SchemeState",
    "StabilityAdvisory",
    "StabilityWarning",
    "ScalarRun",
    "step_scalar",
    "run_scalar",
    "stability_advisory",
]

SOURCE_TIMES = ("new", "old")


class StabilityWarning(UserWarning):
    """The final time lies beyond the sufficient stability horizon."""


def _zero_reaction(u):
    return np.zeros_like(u)


@dataclass(frozen=True)
class ScalarProblem:
    """``D_t^alpha u = d * u_xx + f(u) + g(x, t)`` on a uniform space-time grid.

    ``reaction`` acts elementwise on arrays; ``source`` is called as
    ``source(x_nodes, t)``; ``initial`` is a callable of the nodes or an array.
    """

    alpha: float
    grid: SpaceGrid
    time: TimeGrid
    initial: object
    bc: Boundary = Boundary.DIRICHLET
    reaction: Callable = _zero_reaction
    source: Optional[Callable] = None
    diffusion: float = 1.0
    source_time: str = "new"

    def __post_init__(self):
        check_alpha(self.alpha)
        check_positive("diffusion", self.diffusion)
        object.__setattr__(self, "bc", Boundary.coerce(self.bc))
        if self.source_time not in SOURCE_TIMES:
            raise ValueError(f"source_time must be one of {SOURCE_TIMES}, got {self.source_time!r}")

    def initial_field(self) -> np.ndarray:
        x = self.grid.nodes
        u0 = self.initial(x) if callable(self.initial) else self.initial
        u0 = np.array(np.broadcast_to(np.asarray(u0, dtype=float), x.shape))
        if not np.all(np.isfinite(u0)):
            raise ValueError("initial data must be finite at every node")
        if self.bc is Boundary.DIRICHLET:
            scale = 1.0 + np.max(np.abs(u0))
            if abs(u0[0]) > 1e-12 * scale or abs(u0[-1]) > 1e-12 * scale:
                raise ValueError("Dirichlet initial data must vanish at the boundary nodes")
            u0[0] = u0[-1] = 0.0
        return u0


@dataclass(frozen=True)
class StabilityAdvisory:
    """Sufficient stability horizon ``(1 / (Gamma(1 - alpha) L))**(1 / alpha)``.

    ``amplification`` bounds ``||U^n - V^n|| / ||U^0 - V^0||`` in the discrete
    L2 norm when ``T`` is inside the horizon; it is ``inf`` otherwise.
    """

    alpha: float
    lipschitz: float
    T: float

    @property
    def horizon(self) -> float:
        if self.lipschitz == 0.0:
            return math.inf
        return (1.0 / (math.gamma(1.0 - self.alpha) * self.lipschitz)) ** (1.0 / self.alpha)

    @property
    def within_horizon(self) -> bool:
        return self.T < self.horizon

    @property
    def amplification(self) -> float:
        denom = (1.0 - self.alpha) - self.T**self.alpha * math.gamma(2.0 - self.alpha) * self.lipschitz
        return 1.0 / denom if self.within_horizon and denom > 0 else math.inf


def stability_advisory(alpha, lipschitz, T) -> StabilityAdvisory:
    lipschitz = float(lipschitz)
    if not lipschitz >= 0.0:
        raise ValueError("Lipschitz constant must be >= 0")
    return StabilityAdvisory(check_alpha(alpha), lipschitz, check_positive("T", T))


@dataclass
class SchemeState:
    """Everything a step needs: history, weights, ``C_alpha`` and the factor-ready matrix."""

    history: SolutionHistory
    weights: L1Weights
    C_alpha: float
    system: TridiagonalSystem
    tau: float

    @classmethod
    def start(cls, problem: ScalarProblem) -> "SchemeState":
        N = problem.time.N
        tau = problem.time.tau
        history = SolutionHistory(problem.grid.size, N + 1)
        history.append(problem.initial_field())
        C = step_coefficient(problem.alpha, tau)
        return cls(
            history=history,
            weights=compute_weights(problem.alpha, N),
            C_alpha=C,
            system=assemble_system(problem.grid, C * problem.diffusion, problem.bc),
            tau=tau,
        )

    @property
    def n(self) -> int:
        return len(self.history) - 1


def memory_term(state: SchemeState) -> np.ndarray:
    n = state.n
    if len(state.weights) < n + 1:
        raise ValueError(f"weights cover {len(state.weights) - 1} steps, state is at step {n}")
    # history levels are finite by construction, skip the re-check
    return memory_coefficients(state.weights, n) @ state.history.levels


def implicit_solve(system: TridiagonalSystem, rhs, bc: Boundary) -> np.ndarray:
    if bc is Boundary.DIRICHLET:
        out = np.zeros_like(rhs)
        out[1:-1] = thomas_solve(system, rhs[1:-1])
        return out
    return thomas_solve(system, rhs)


def _raise_nonfinite(values, step, what):
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        node = int(bad[0])
        raise NonFiniteError(f"non-finite {what} at step {step}, node {node}", step=step, node=node)


def step_scalar(state: SchemeState, problem: ScalarProblem) -> np.ndarray:
    """Advance ``state`` by one level and return ``U^{n+1}``."""
    n = state.n
    C = state.C_alpha
    u_n = state.history.latest
    rhs = memory_term(state) + C * np.asarray(problem.reaction(u_n), dtype=float)
    if problem.source is not None:
        t_eval = (n + 1) * state.tau if problem.source_time == "new" else n * state.tau
        rhs = rhs + C * np.asarray(problem.source(problem.grid.nodes, t_eval), dtype=float)
    _raise_nonfinite(rhs, n + 1, "right-hand side")
    u_new = implicit_solve(state.system, rhs, problem.bc)
    _raise_nonfinite(u_new, n + 1, "solution")
    state.history.append(u_new)
    return u_new


@dataclass
class ScalarRun:
    """Sampled trajectory of a scalar run; ``values[k]`` is the field at ``times[k]``."""

    times: np.ndarray
    values: np.ndarray
    history: SolutionHistory
    advisory: Optional[StabilityAdvisory] = None
    grid: Optional[SpaceGrid] = field(default=None, repr=False)

    @property
    def final(self) -> np.ndarray:
        return self.history.latest


def record_steps(record, N):
    if record == "all":
        return set(range(N + 1))
    if record == "final":
        return {N}
    k = int(record)
    if k < 1:
        raise ValueError("sampling interval must be >= 1")
    return set(range(0, N + 1, k)) | {N}


def run_scalar(problem: ScalarProblem, record="all", lipschitz=None) -> ScalarRun:
    """Integrate from ``t = 0`` to ``T``.

    ``record`` is ``"all"``, ``"final"`` or an integer sampling interval (the
    final level is always kept). When ``lipschitz`` is given a
    :class:`StabilityAdvisory` is attached and a :class:`StabilityWarning`
    issued if ``T`` lies past the horizon; the run proceeds either way.
    """
    N = problem.time.N
    keep = record_steps(record, N)
    advisory = None
    if lipschitz is not None:
        advisory = stability_advisory(problem.alpha, lipschitz, problem.time.T)
        if not advisory.within_horizon:
            warnings.warn(
                f"T={problem.time.T} exceeds the stability horizon {advisory.horizon:.6g}",
                StabilityWarning,
                stacklevel=2,
            )
    state = SchemeState.start(problem)
    for _ in range(N):
        step_scalar(state, problem)
    steps = sorted(keep)
    levels = state.history.levels
    return ScalarRun(
        times=np.array(steps) * problem.time.tau,
        values=np.array(levels[steps]),
        history=state.history,
        advisory=advisory,
        grid=problem.grid,
    )
