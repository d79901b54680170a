"""Closed-form solution of the homogeneous system, used as ground truth.

On (0, a)^2 with Dirichlet conditions the Laplacian has eigenpairs

    lambda_{mn} = (m^2 + n^2) (pi/a)^2,
    phi_{mn}(x, y) = (2/a) sin(m pi x / a) sin(n pi y / a),

and each modal coefficient pair (alpha, beta) of (v, w) evolves under the
2x2 system [[0, lambda], [-lambda, -rho*lambda]].  For rho > 2 both modal
rates are real and negative and the evolution is an explicit combination of
two exponentials; rho < 2 would need complex rates and is out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "Mode",
    "ModalEvolution",
    "modal_rates",
    "modal_constants",
    "modal_evolve",
    "similarity_matrix",
    "exact_test_solution",
    "evaluate_modal_sum",
]


def _check_rho(rho: float) -> None:
    if rho <= 2:
        raise ValueError(
            f"the spectral reference requires rho > 2 (real distinct rates), got {rho}")


def _disc(rho: float) -> float:
    return math.sqrt(rho * rho - 4.0)


def modal_rates(lam: float, rho: float) -> tuple[float, float]:
    """Decay rates eta_1 <= eta_2 < 0 of one mode with Laplacian eigenvalue lam.

    eta_{1,2} = -(lam/2)(rho +- sqrt(rho^2 - 4)); they satisfy
    eta_1 * eta_2 = lam^2 and eta_1 + eta_2 = -rho*lam.
    """
    _check_rho(rho)
    if lam <= 0:
        raise ValueError(f"Laplacian eigenvalue must be positive, got {lam}")
    s = _disc(rho)
    return -(lam / 2.0) * (rho + s), -(lam / 2.0) * (rho - s)


def similarity_matrix(rho: float) -> np.ndarray:
    """Columns are the eigenvectors of the modal 2x2 evolution matrix."""
    _check_rho(rho)
    s = _disc(rho)
    return np.array([[-rho / 2.0 + s / 2.0, -rho / 2.0 - s / 2.0],
                     [1.0, 1.0]])


def modal_constants(alpha0: float, beta0: float, rho: float) -> tuple[float, float]:
    """Expansion constants (c1, c2) with S @ (c1, c2) = (alpha0, beta0)."""
    _check_rho(rho)
    s = _disc(rho)
    c1 = (alpha0 + beta0 / 2.0 * (rho + s)) / s
    c2 = (-alpha0 - beta0 / 2.0 * (rho - s)) / s
    return c1, c2


@dataclass(frozen=True)
class Mode:
    """One Dirichlet mode on (0, a)^2 with its initial coefficient pair.

    alpha0, beta0 are coefficients of (v, w) against the orthonormal
    eigenfunction (2/a) sin(m pi x/a) sin(n pi y/a), so a pure datum
    c*sin(m pi x/a)sin(n pi y/a) has coefficient (a/2)*c.
    """

    m: int
    n: int
    alpha0: float
    beta0: float
    a: float = math.pi

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ValueError("wave numbers must be positive integers")
        if self.a <= 0:
            raise ValueError("domain side must be positive")

    @property
    def lam(self) -> float:
        return (self.m**2 + self.n**2) * (math.pi / self.a) ** 2

    def eigenfunction(self, x, y):
        return (2.0 / self.a * np.sin(self.m * math.pi * x / self.a)
                * np.sin(self.n * math.pi * y / self.a))


@dataclass(frozen=True)
class ModalEvolution:
    """Diagonalized evolution data of one mode: rates, constants, eigenbasis."""

    eta1: float
    eta2: float
    c1: float
    c2: float
    similarity: np.ndarray

    @classmethod
    def of(cls, mode: Mode, rho: float) -> "ModalEvolution":
        eta1, eta2 = modal_rates(mode.lam, rho)
        c1, c2 = modal_constants(mode.alpha0, mode.beta0, rho)
        return cls(eta1=eta1, eta2=eta2, c1=c1, c2=c2,
                   similarity=similarity_matrix(rho))

    def coefficients(self, t: float) -> tuple[float, float]:
        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        z = np.array([self.c1 * math.exp(self.eta1 * t),
                      self.c2 * math.exp(self.eta2 * t)])
        alpha, beta = self.similarity @ z
        return float(alpha), float(beta)


def modal_evolve(mode: Mode, rho: float, t: float) -> tuple[float, float]:
    """Coefficients (alpha(t), beta(t)) of one mode at time t >= 0."""
    return ModalEvolution.of(mode, rho).coefficients(t)


def exact_test_solution(x, y, t):
    """Reference solution of the benchmark problem (rho = 5/2, a = pi).

    Initial data (v, w)(0) = (0, (3/2) sin 2x sin 2y); then

        v(t) = (e^{-4t} - e^{-16t}) sin 2x sin 2y,
        w(t) = (2 e^{-16t} - e^{-4t}/2) sin 2x sin 2y.
    """
    shape = np.sin(2.0 * np.asarray(x)) * np.sin(2.0 * np.asarray(y))
    v = (math.exp(-4.0 * t) - math.exp(-16.0 * t)) * shape
    w = (2.0 * math.exp(-16.0 * t) - 0.5 * math.exp(-4.0 * t)) * shape
    return v, w


def evaluate_modal_sum(modes: Iterable[Mode], rho: float, x, y, t: float):
    """Superpose finitely many evolved modes at points (x, y) and time t."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v = np.zeros(np.broadcast(x, y).shape)
    w = np.zeros_like(v)
    for mode in modes:
        alpha, beta = modal_evolve(mode, rho, t)
        phi = mode.eigenfunction(x, y)
        v += alpha * phi
        w += beta * phi
    return v, w
