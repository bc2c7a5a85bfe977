"""Uniform 1-D grid, the three-point Laplacian and tridiagonal solves."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._validation import SolverFault, check_finite

__all__ = [
    "Boundary",
    "SpaceGrid",
    "TridiagonalSystem",
    "laplacian_apply",
    "assemble_system",
    "thomas_solve",
    "discrete_l2",
]


class Boundary(str, enum.Enum):
    """Homogeneous boundary conditions supported by the solvers."""

    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def coerce(cls, value) -> "Boundary":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown boundary condition {value!r}; use 'dirichlet' or 'neumann'") from None


@dataclass(frozen=True)
class SpaceGrid:
    """``M`` equal subintervals of ``[x_left, x_right]``; nodes ``0..M``."""

    M: int
    x_left: float = 0.0
    x_right: float = 1.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"M must be an integer >= 2, got {self.M!r}")
        if not self.x_right > self.x_left:
            raise ValueError("x_right must exceed x_left")

    @property
    def h(self) -> float:
        return (self.x_right - self.x_left) / self.M

    @property
    def nodes(self) -> np.ndarray:
        return self.x_left + np.arange(self.M + 1) * self.h

    @property
    def size(self) -> int:
        return self.M + 1


def laplacian_apply(field, grid: SpaceGrid, bc) -> np.ndarray:
    """Second central difference of a node field.

    Dirichlet boundary entries are returned as 0. Neumann boundaries use the
    ghost reflection ``u[-1] = u[1]``, ``u[M+1] = u[M-1]``.
    """
    bc = Boundary.coerce(bc)
    u = np.asarray(field, dtype=float)
    if u.shape != (grid.size,):
        raise ValueError(f"field has shape {u.shape}, grid expects ({grid.size},)")
    h2 = grid.h**2
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h2
    if bc is Boundary.DIRICHLET:
        out[0] = out[-1] = 0.0
    else:
        out[0] = 2.0 * (u[1] - u[0]) / h2
        out[-1] = 2.0 * (u[-2] - u[-1]) / h2
    return out


@dataclass(frozen=True)
class TridiagonalSystem:
    """Tridiagonal matrix stored by diagonals, all of length ``n``.

    Row ``i`` reads ``lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1]``;
    ``lower[0]`` and ``upper[-1]`` are unused and kept at zero.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        for name in ("lower", "diag", "upper"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.diag)
        if n == 0 or len(self.lower) != n or len(self.upper) != n:
            raise ValueError("lower, diag and upper must have the same non-zero length")

    @property
    def size(self) -> int:
        return len(self.diag)

    def is_diagonally_dominant(self) -> bool:
        lo = np.abs(self.lower.copy())
        up = np.abs(self.upper.copy())
        lo[0] = 0.0
        up[-1] = 0.0
        return bool(np.all(np.abs(self.diag) > lo + up))

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[1:] += self.lower[1:] * x[:-1]
        y[:-1] += self.upper[:-1] * x[1:]
        return y

    def to_dense(self) -> np.ndarray:
        n = self.size
        A = np.diag(self.diag)
        if n > 1:
            A += np.diag(self.lower[1:], -1) + np.diag(self.upper[:-1], 1)
        return A


def assemble_system(grid: SpaceGrid, c, bc) -> TridiagonalSystem:
    """Matrix of ``I - c * delta_x^2`` on the unknowns of the given boundary type.

    Dirichlet keeps the ``M - 1`` interior nodes. Neumann keeps all ``M + 1``
    nodes with the ghost reflection folded into the first and last rows.
    """
    bc = Boundary.coerce(bc)
    c = float(c)
    if not c >= 0.0:
        raise ValueError(f"diffusion coefficient c must be >= 0, got {c!r}")
    r = c / grid.h**2
    n = grid.M - 1 if bc is Boundary.DIRICHLET else grid.M + 1
    diag = np.full(n, 1.0 + 2.0 * r)
    lower = np.full(n, -r)
    upper = np.full(n, -r)
    lower[0] = 0.0
    upper[-1] = 0.0
    if bc is Boundary.NEUMANN:
        upper[0] = -2.0 * r
        lower[-1] = -2.0 * r
    return TridiagonalSystem(lower, diag, upper)


def thomas_solve(system: TridiagonalSystem, rhs) -> np.ndarray:
    """Solve ``system @ x = rhs`` by forward elimination and back substitution."""
    d = np.asarray(rhs, dtype=float)
    n = system.size
    if d.shape != (n,):
        raise ValueError(f"rhs has shape {d.shape}, system expects ({n},)")
    check_finite(d, "right-hand side")
    a = system.lower.tolist()
    b = system.diag.tolist()
    c = system.upper.tolist()
    d = d.tolist()
    cp = [0.0] * n
    dp = [0.0] * n
    piv = b[0]
    if piv == 0.0:
        raise SolverFault("zero pivot in row 0")
    cp[0] = c[0] / piv
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i] * cp[i - 1]
        if piv == 0.0:
            raise SolverFault(f"zero pivot in row {i}")
        cp[i] = c[i] / piv
        dp[i] = (d[i] - a[i] * dp[i - 1]) / piv
    x = dp
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x)


def discrete_l2(values, h) -> float:
    """``(h * sum_i v_i**2) ** 0.5`` over every node passed in."""
    v = np.asarray(values, dtype=float)
    return float(np.sqrt(h * np.dot(v, v)))
