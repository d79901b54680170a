"""Shared configuration, state and reporting types used by both schemes.

Everything here is plain data.  Instances are treated as immutable after
construction and may be shared freely across concurrent runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "PlateParams",
    "TimeGrid",
    "StatePair",
    "ControlTrajectory",
    "RunReport",
    "KalmanDiagnostics",
    "make_time_grid",
    "energy",
    "euclidean_sq",
    "rate_sequence",
]


@dataclass(frozen=True)
class PlateParams:
    """Physical and discretization configuration of one run.

    rho : structural damping coefficient, rho > 0 and rho != 2.
    a   : side length of the square domain (0, a)^2.
    T   : terminal (steering) time.
    m   : number of time steps, so dt = T/m.
    n   : interior resolution per axis (FDM grid points, FEM mesh nodes).
    """

    rho: float
    a: float
    T: float
    m: int
    n: int

    def __post_init__(self) -> None:
        if self.rho <= 0 or self.rho == 2:
            raise ValueError(f"rho must be positive and != 2, got {self.rho}")
        if self.a <= 0:
            raise ValueError(f"domain side must be positive, got {self.a}")
        if self.T <= 0:
            raise ValueError(f"terminal time must be positive, got {self.T}")
        if self.m < 2:
            raise ValueError(f"need at least 2 time steps, got {self.m}")
        if self.n < 2:
            raise ValueError(f"need interior resolution >= 2, got {self.n}")

    @property
    def dt(self) -> float:
        return self.T / self.m

    def warn_if_stiff(self) -> str | None:
        """The FEM scheme is only guaranteed solvable for dt < 1/rho."""
        if self.dt >= 1.0 / self.rho:
            return (f"dt = {self.dt:g} >= 1/rho = {1.0 / self.rho:g}; "
                    "the implicit step is used outside its guaranteed regime")
        return None


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_j = j*dt, j = 0..m."""

    dt: float
    nodes: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.nodes) - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])


def make_time_grid(T: float, m: int) -> TimeGrid:
    """Uniform time grid with m steps on [0, T]."""
    if T <= 0:
        raise ValueError(f"terminal time must be positive, got {T}")
    if m < 2:
        raise ValueError(f"need at least 2 time steps, got {m}")
    dt = T / m
    nodes = dt * np.arange(m + 1)
    nodes.flags.writeable = False
    return TimeGrid(dt=dt, nodes=nodes)


@dataclass(frozen=True)
class StatePair:
    """Coefficient vectors (v, w) of the first-order system at one time level."""

    v: np.ndarray
    w: np.ndarray

    def __post_init__(self) -> None:
        if self.v.shape != self.w.shape or self.v.ndim != 1:
            raise ValueError(
                f"v and w must be equal-length vectors, got {self.v.shape} and {self.w.shape}")

    @property
    def size(self) -> int:
        return len(self.v)


@dataclass(frozen=True)
class ControlTrajectory:
    """The sequence of discrete controls u^{j+1}, j = 0..m-1, on its time grid."""

    controls: np.ndarray  # shape (m, N); row j is the control applied at t_{j+1}
    grid: TimeGrid

    def __post_init__(self) -> None:
        if len(self.controls) != self.grid.m:
            raise ValueError(
                f"expected {self.grid.m} controls, got {len(self.controls)}")


@dataclass(frozen=True)
class RunReport:
    """Per-run summary: terminal energy, control norm, configuration echo."""

    terminal_energy: float
    control_norm: float
    T: float
    dt: float
    N: int

    def __post_init__(self) -> None:
        if self.terminal_energy < 0 or self.control_norm < 0:
            raise ValueError("norms must be nonnegative")


@dataclass(frozen=True)
class KalmanDiagnostics:
    """Result of the controllability check on one discretization."""

    dim: int                  # state dimension 2N
    rank: int                 # numerical rank of the Kalman matrix
    identity_error: float     # max |K K^{-1} - I| with the closed-form inverse
    operator_inv_norm: float  # ||D^{-1}||_2 (FDM) / ||S^{-1} M||_2 (FEM)

    @property
    def full_rank(self) -> bool:
        return self.rank == self.dim


def euclidean_sq(x: np.ndarray) -> float:
    """Squared Euclidean norm, the FDM state norm."""
    return float(np.dot(x, x))


def energy(state: StatePair, sq_norm: Callable[[np.ndarray], float] = euclidean_sq) -> float:
    """Unhalved energy ||v||^2 + ||w||^2 in the scheme-supplied squared norm.

    The FDM scheme passes the Euclidean norm, the FEM scheme a
    mass-matrix-weighted one.  A dimension mismatch inside ``sq_norm``
    surfaces as its own error.
    """
    return sq_norm(state.v) + sq_norm(state.w)


def rate_sequence(values: Sequence[float]) -> list[float]:
    """log2 ratios of consecutive values, the "rate" column of a T-doubling sweep.

    rate_k = log2(values_k / values_{k+1}); a geometric sequence with ratio
    1/4 yields the constant rate 2.
    """
    if len(values) < 2:
        raise ValueError("need at least two values to form rates")
    vals = np.asarray(values, dtype=float)
    if np.any(vals <= 0):
        raise ValueError("rates are only defined for positive values")
    return [float(np.log2(vals[k] / vals[k + 1])) for k in range(len(vals) - 1)]
