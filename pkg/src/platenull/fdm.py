"""Finite-difference scheme: 5-point Laplacian, implicit stepping, control.

The interior grid of (0, a)^2 carries N = n^2 unknowns ordered so that
entry (j-1)*n + (i-1) approximates the value at (x_i, y_j) = (i*h, j*h);
the x index runs fastest.  With that ordering the 5-point matrix is the
Kronecker sum (1/h^2)(I (x) E + E (x) I) of 1D second differences, which
also yields its eigenvalues in closed form.

One implicit time step of the coupled system solves

    v+ - dt*D w+           = v,
    w+ + dt*D (v+ + rho w+) = dt*u + w,

by eliminating v+: the Schur matrix I + rho*dt*D + (dt*D)^2 is SPD and is
factored once per run.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .control import g_vector, mu_zero
from .core import (ControlTrajectory, KalmanDiagnostics, PlateParams, RunReport,
                   StatePair, energy, make_time_grid)
from .linalg import SpdFactorization

__all__ = [
    "FdGrid",
    "build_dn",
    "dn_eigenvalue",
    "sample_on_grid",
    "FdmStepper",
    "fdm_homogeneous_step",
    "fdm_controlled_step",
    "fdm_control_at_step",
    "run_fdm_null_control",
    "KalmanDiagnostics",
    "kalman_check_fdm",
]

# Twin trajectory source: "discrete" steps the homogeneous system with the
# same implicit factorization; a callable t -> (v_h, w_h) supplies grid
# samples of a known homogeneous solution instead.
TwinSource = str | Callable[[float], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class FdGrid:
    """Interior grid metadata for (0, a)^2 with n points per axis."""

    n: int
    a: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"need n >= 1 interior points, got {self.n}")
        if self.a <= 0:
            raise ValueError(f"domain side must be positive, got {self.a}")

    @property
    def h(self) -> float:
        return self.a / (self.n + 1)

    @property
    def N(self) -> int:
        return self.n * self.n

    def index(self, i: int, j: int) -> int:
        """Flat index of (x_i, y_j), 1-based i, j; i runs fastest."""
        if not (1 <= i <= self.n and 1 <= j <= self.n):
            raise IndexError(f"(i, j) = ({i}, {j}) outside 1..{self.n}")
        return (j - 1) * self.n + (i - 1)

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate vectors (x, y) of all N interior points in flat order."""
        coords = self.h * np.arange(1, self.n + 1)
        return np.tile(coords, self.n), np.repeat(coords, self.n)


def build_dn(grid: FdGrid) -> sp.csr_matrix:
    """Assemble the N x N 5-point Laplacian (1/h^2)(I (x) E + E (x) I)."""
    n = grid.n
    ones = np.ones(n)
    E = sp.diags([-ones[:-1], 2 * ones, -ones[:-1]], [-1, 0, 1])
    eye = sp.identity(n)
    return ((sp.kron(eye, E) + sp.kron(E, eye)) / grid.h**2).tocsr()


def dn_eigenvalue(i: int, j: int, grid: FdGrid) -> float:
    """Eigenvalue (1/h^2)(4 - 2 cos(i pi/(n+1)) - 2 cos(j pi/(n+1))).

    The eigenvector is the grid sample of sin(i pi x/a) sin(j pi y/a).
    The smallest one, (i, j) = (1, 1), equals 8 sin^2(h pi / (2a)) / h^2
    and tends to 2 pi^2 / a^2 as the grid is refined.
    """
    if not (1 <= i <= grid.n and 1 <= j <= grid.n):
        raise IndexError(f"(i, j) = ({i}, {j}) outside 1..{grid.n}")
    k = math.pi / (grid.n + 1)
    return (4.0 - 2.0 * (math.cos(i * k) + math.cos(j * k))) / grid.h**2


def sample_on_grid(f: Callable[[np.ndarray, np.ndarray], np.ndarray],
                   grid: FdGrid) -> np.ndarray:
    """Sample f(x, y) at the interior points in flat grid order."""
    x, y = grid.points()
    return np.asarray(f(x, y), dtype=float) + np.zeros(grid.N)


class FdmStepper:
    """One implicit-Euler step of the coupled system, factored once.

    The homogeneous and the controlled step share this factorization; the
    controlled step with u = None is bitwise the homogeneous one.
    """

    def __init__(self, dn: sp.spmatrix, dt: float, rho: float):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dn = dn.tocsr()
        self.dt = dt
        self.rho = rho
        N = dn.shape[0]
        dtD = dt * self.dn
        schur = (sp.identity(N) + rho * dtD + dtD @ dtD).tocsc()
        self._schur = SpdFactorization(schur)

    def step(self, state: StatePair, u: np.ndarray | None = None) -> StatePair:
        b1 = state.v
        b2 = state.w if u is None else state.w + self.dt * u
        w_next = self._schur.solve(b2 - self.dt * (self.dn @ b1))
        v_next = b1 + self.dt * (self.dn @ w_next)
        return StatePair(v=v_next, w=w_next)


def fdm_homogeneous_step(state: StatePair, dt: float, rho: float,
                         dn: sp.spmatrix) -> StatePair:
    """Advance (v, w) one implicit step of the uncontrolled system."""
    return FdmStepper(dn, dt, rho).step(state)


def fdm_controlled_step(state: StatePair, u: np.ndarray, dt: float, rho: float,
                        dn: sp.spmatrix) -> StatePair:
    """Advance one implicit step with forcing dt*u in the w equation."""
    return FdmStepper(dn, dt, rho).step(state, u)


def fdm_control_at_step(vh_next2: np.ndarray, vh_next: np.ndarray, wh_next: np.ndarray,
                        t_next: float, dt: float, T: float, rho: float,
                        dn_solver: SpdFactorization) -> np.ndarray:
    """Assemble u^{j+1} = mu0 + mu1' from homogeneous values at two future levels."""
    mu0 = mu_zero(vh_next, wh_next, rho, t_next, T)
    G = g_vector(vh_next2, vh_next, dt, t_next, T)
    mu1_prime = dn_solver.solve(-G)
    return mu0 + mu1_prime


def _twin_levels(stepper: FdmStepper, v0: np.ndarray, w0: np.ndarray, m: int,
                 dt: float, twin: TwinSource):
    """Homogeneous trajectory at levels 0..m+1 (one past T, for the last G)."""
    if callable(twin):
        return [twin(j * dt) for j in range(m + 2)]
    if twin != "discrete":
        raise ValueError(f"twin must be 'discrete' or a callable, got {twin!r}")
    levels = [(v0, w0)]
    state = StatePair(v=v0, w=w0)
    for _ in range(m + 1):
        state = stepper.step(state)
        levels.append((state.v, state.w))
    return levels


def run_fdm_null_control(params: PlateParams,
                         v0: Callable[[np.ndarray, np.ndarray], np.ndarray],
                         w0: Callable[[np.ndarray, np.ndarray], np.ndarray],
                         *,
                         twin: TwinSource = "discrete",
                         weighted: bool = False,
                         ) -> tuple[RunReport, ControlTrajectory, StatePair]:
    """Steer the sampled initial data toward zero over [0, T].

    Per step j: read the homogeneous twin at levels j+1 and j+2, assemble
    u^{j+1}, then advance the controlled state one implicit step.  Reports
    the terminal energy and the control norm (dt * sum ||u^{j+1}||^2)^(1/2);
    ``weighted`` switches both from Euclidean to h-weighted discrete-L2
    norms for cross-scheme comparison.
    """
    stiff = params.warn_if_stiff()
    if stiff is not None:
        warnings.warn(stiff, RuntimeWarning, stacklevel=2)
    grid = FdGrid(n=params.n, a=params.a)
    dn = build_dn(grid)
    tg = make_time_grid(params.T, params.m)
    dt, T, rho = tg.dt, params.T, params.rho

    v = sample_on_grid(v0, grid)
    w = sample_on_grid(w0, grid)

    stepper = FdmStepper(dn, dt, rho)
    dn_solver = SpdFactorization(dn.tocsc())
    twin_levels = _twin_levels(stepper, v, w, params.m, dt, twin)

    state = StatePair(v=v, w=w)
    controls = np.empty((params.m, grid.N))
    for j in range(params.m):
        t_next = tg.nodes[j + 1]
        vh1, wh1 = twin_levels[j + 1]
        vh2, _ = twin_levels[j + 2]
        u = fdm_control_at_step(vh2, vh1, wh1, t_next, dt, T, rho, dn_solver)
        controls[j] = u
        state = stepper.step(state, u)

    state_w = grid.h**2 if weighted else 1.0
    terminal = energy(state, lambda x: state_w * float(np.dot(x, x)))
    control_norm = math.sqrt(dt * state_w * float(np.sum(controls * controls)))
    report = RunReport(terminal_energy=terminal, control_norm=control_norm,
                       T=T, dt=dt, N=grid.N)
    return report, ControlTrajectory(controls=controls, grid=tg), state


_DENSE_CAP = 24


def kalman_check_fdm(grid: FdGrid, rho: float) -> KalmanDiagnostics:
    """Verify the rank condition for [B, A B] with the closed-form inverse.

    K = [[0, D], [I, -rho D]] and K^{-1} = [[rho I, I], [D^{-1}, 0]]; the
    product is checked densely, so the grid is capped at n <= 24.
    ||D^{-1}||_2 equals 1/lambda_{1,1} and stays bounded by ~a^2/(2 pi^2)
    as the grid is refined.
    """
    if grid.n > _DENSE_CAP:
        raise ValueError(f"dense Kalman check capped at n <= {_DENSE_CAP}")
    N = grid.N
    D = build_dn(grid).toarray()
    Z = np.zeros((N, N))
    eye = np.eye(N)
    K = np.block([[Z, D], [eye, -rho * D]])
    Dinv = np.linalg.inv(D)
    Kinv = np.block([[rho * eye, eye], [Dinv, Z]])
    identity_error = float(np.max(np.abs(K @ Kinv - np.eye(2 * N))))
    rank = int(np.linalg.matrix_rank(K))
    return KalmanDiagnostics(dim=2 * N, rank=rank, identity_error=identity_error,
                             operator_inv_norm=1.0 / dn_eigenvalue(1, 1, grid))
