"""Sparse SPD storage and the linear solves backing both schemes.

Factorizations are computed once and reused across all time steps of a run;
they are immutable after construction and safe to share between threads.
Every solve is residual-checked, so a silently wrong factorization cannot
leak into a table.  The check is the backward-error bound
||Ax - b|| <= tol * (||A|| ||x|| + ||b||), which a stable factorization
meets for any right-hand side; on well-scaled input it coincides with the
plain relative residual ||Ax - b||/||b|| <= tol.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "SpdFactorization",
    "solve_spd",
    "BlockSolver",
    "solve_block_2x2",
]

# Above this dimension a direct factorization is replaced by conjugate
# gradients; table-sized problems (N <= ~4e3) always take the direct path.
_DIRECT_LIMIT = 10_000

_SPD_RESIDUAL_TOL = 1e-12
_BLOCK_RESIDUAL_TOL = 1e-10


def _check_square(A: sp.spmatrix, name: str = "matrix") -> None:
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")


def _check_symmetric(A: sp.spmatrix, tol: float = 1e-10) -> None:
    gap = abs(A - A.T)
    scale = max(abs(A).max(), 1.0)
    if gap.nnz and gap.max() > tol * scale:
        raise ValueError("matrix is not symmetric")


class SpdFactorization:
    """Direct factorization of a sparse SPD matrix, with a CG fallback.

    Construction certifies symmetry and (via factorization success or CG
    convergence on first use) positive definiteness on the range exercised.
    """

    def __init__(self, A: sp.spmatrix, *, direct_limit: int = _DIRECT_LIMIT):
        _check_square(A, "SPD matrix")
        _check_symmetric(A)
        self.A = A.tocsc()
        self.n = A.shape[0]
        self._norm = spla.norm(self.A, 1)
        self._direct = self.n <= direct_limit
        if self._direct:
            try:
                self._lu = spla.splu(self.A)
            except RuntimeError as exc:  # singular to working precision
                raise np.linalg.LinAlgError(f"factorization failed: {exc}") from exc

    def solve(self, b: np.ndarray) -> np.ndarray:
        if b.shape != (self.n,):
            raise ValueError(f"right-hand side has shape {b.shape}, expected ({self.n},)")
        if self._direct:
            x = self._lu.solve(b)
        else:
            x, info = spla.cg(self.A, b, rtol=_SPD_RESIDUAL_TOL, atol=0.0)
            if info != 0:
                raise np.linalg.LinAlgError(f"CG did not converge (info={info})")
        scale = self._norm * np.linalg.norm(x) + np.linalg.norm(b)
        if scale > 0:
            res = np.linalg.norm(self.A @ x - b) / scale
            if not res <= _SPD_RESIDUAL_TOL:
                raise np.linalg.LinAlgError(
                    f"solve backward error {res:.3e} exceeds {_SPD_RESIDUAL_TOL:.0e}; "
                    "input is likely not SPD or is severely ill-conditioned")
        return x


def solve_spd(A: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    """One-shot SPD solve; factor once via :class:`SpdFactorization` to reuse."""
    return SpdFactorization(A).solve(b)


class BlockSolver:
    """Factored solver for the coupled system [[A11, A12], [A21, A22]].

    The time-step matrices of both schemes have this shape; the coupled
    matrix is factored once and reused for every step.  Solvability rests on
    the Schur complement A22 - A21 A11^{-1} A12 being invertible, which the
    factorization certifies.
    """

    def __init__(self, A11, A12, A21, A22):
        blocks = [A11, A12, A21, A22]
        shapes = {B.shape for B in blocks}
        if len(shapes) != 1 or blocks[0].shape[0] != blocks[0].shape[1]:
            raise ValueError(f"blocks must be conformable square, got {shapes}")
        self.n = blocks[0].shape[0]
        self._blocks = [sp.csr_matrix(B) for B in blocks]
        full = sp.bmat([[self._blocks[0], self._blocks[1]],
                        [self._blocks[2], self._blocks[3]]], format="csc")
        self._norm = spla.norm(full, 1)
        try:
            self._lu = spla.splu(full)
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(
                f"singular block system (Schur complement not invertible): {exc}") from exc

    def solve(self, b1: np.ndarray, b2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if b1.shape != (self.n,) or b2.shape != (self.n,):
            raise ValueError("right-hand sides do not match the block dimension")
        x = self._lu.solve(np.concatenate([b1, b2]))
        x1, x2 = x[: self.n], x[self.n:]
        A11, A12, A21, A22 = self._blocks
        r1 = A11 @ x1 + A12 @ x2 - b1
        r2 = A21 @ x1 + A22 @ x2 - b2
        b = np.concatenate([b1, b2])
        scale = self._norm * np.linalg.norm(x) + np.linalg.norm(b)
        if scale > 0:
            res = np.sqrt(np.dot(r1, r1) + np.dot(r2, r2)) / scale
            if not res <= _BLOCK_RESIDUAL_TOL:
                raise np.linalg.LinAlgError(
                    f"block solve backward error {res:.3e} exceeds "
                    f"{_BLOCK_RESIDUAL_TOL:.0e}")
        return x1, x2


def solve_block_2x2(A11, A12, A21, A22, b1: np.ndarray, b2: np.ndarray):
    """One-shot coupled 2x2 block solve; use :class:`BlockSolver` for stepping."""
    return BlockSolver(A11, A12, A21, A22).solve(b1, b2)
