import numpy as np
import pytest
import scipy.sparse as sp

from platenull.fdm import FdGrid, build_dn
from platenull.fem import assemble_mass, assemble_stiffness, build_structured_mesh
from platenull.linalg import BlockSolver, SpdFactorization, solve_block_2x2, solve_spd


def residual(A, x, b):
    return np.linalg.norm(A @ x - b) / np.linalg.norm(b)


class TestSolveSpd:
    def test_identity(self):
        b = np.arange(1.0, 6.0)
        x = solve_spd(sp.identity(5, format="csc"), b)
        np.testing.assert_allclose(x, b, rtol=1e-14)

    def test_scalar_matrix(self):
        b = np.arange(1.0, 6.0)
        x = solve_spd(2.0 * sp.identity(5, format="csc"), b)
        np.testing.assert_allclose(x, b / 2.0, rtol=1e-14)

    def test_dn_solve_residual(self):
        A = build_dn(FdGrid(n=2, a=3.0))
        b = np.ones(4)
        x = solve_spd(A, b)
        assert residual(A, x, b) <= 1e-12

    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    def test_recovers_random_solution(self, n):
        rng = np.random.default_rng(n)
        mesh = build_structured_mesh(n, np.pi)
        keep = mesh.interior
        mats = [build_dn(FdGrid(n=n, a=np.pi)),
                assemble_mass(mesh)[keep][:, keep],
                assemble_stiffness(mesh)[keep][:, keep]]
        for A in mats:
            x = rng.standard_normal(A.shape[0])
            got = solve_spd(A, A @ x)
            assert np.linalg.norm(got - x) <= 1e-10 * np.linalg.norm(x)

    def test_rejects_nonsymmetric(self):
        A = sp.csc_matrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(ValueError, match="symmetric"):
            solve_spd(A, np.ones(2))

    def test_rejects_singular(self):
        A = sp.csc_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(np.linalg.LinAlgError):
            solve_spd(A, np.ones(2))

    def test_rejects_dimension_mismatch(self):
        fac = SpdFactorization(sp.identity(3, format="csc"))
        with pytest.raises(ValueError):
            fac.solve(np.ones(4))

    def test_cg_fallback_path(self):
        A = build_dn(FdGrid(n=4, a=np.pi))
        rng = np.random.default_rng(1)
        x = rng.standard_normal(16)
        fac = SpdFactorization(A, direct_limit=1)  # force iterative branch
        got = fac.solve(A @ x)
        assert np.linalg.norm(got - x) <= 1e-8 * np.linalg.norm(x)


class TestBlockSolve:
    def test_decoupled_identity(self):
        eye = sp.identity(3, format="csr")
        zero = sp.csr_matrix((3, 3))
        b1, b2 = np.arange(3.0), np.arange(3.0, 6.0)
        x1, x2 = solve_block_2x2(eye, zero, zero, eye, b1, b2)
        np.testing.assert_allclose(x1, b1, rtol=1e-14)
        np.testing.assert_allclose(x2, b2, rtol=1e-14)

    def test_hand_solvable_pattern(self):
        # [[I, -I], [I, I]] (x1, x2) = (b, b)  =>  x1 = b, x2 = 0
        eye = sp.identity(3, format="csr")
        b = np.array([1.0, -2.0, 0.5])
        x1, x2 = solve_block_2x2(eye, -eye, eye, eye, b, b)
        np.testing.assert_allclose(x1, b, atol=1e-14)
        np.testing.assert_allclose(x2, np.zeros(3), atol=1e-14)

    def test_fdm_step_blocks_residual(self):
        dt, rho = 0.2, 2.5
        D = build_dn(FdGrid(n=4, a=np.pi))
        eye = sp.identity(16, format="csr")
        blocks = (eye, -dt * D, dt * D, eye + rho * dt * D)
        rng = np.random.default_rng(4)
        b1, b2 = rng.standard_normal(16), rng.standard_normal(16)
        x1, x2 = solve_block_2x2(*blocks, b1, b2)
        r1 = blocks[0] @ x1 + blocks[1] @ x2 - b1
        r2 = blocks[2] @ x1 + blocks[3] @ x2 - b2
        scale = np.linalg.norm(np.concatenate([b1, b2]))
        assert np.sqrt(r1 @ r1 + r2 @ r2) <= 1e-10 * scale

    def test_reuse_factorization(self):
        eye = sp.identity(4, format="csr")
        solver = BlockSolver(2 * eye, eye, eye, 2 * eye)
        rng = np.random.default_rng(2)
        for _ in range(3):
            b1, b2 = rng.standard_normal(4), rng.standard_normal(4)
            x1, x2 = solver.solve(b1, b2)
            np.testing.assert_allclose(2 * x1 + x2, b1, atol=1e-12)
            np.testing.assert_allclose(x1 + 2 * x2, b2, atol=1e-12)

    def test_rejects_nonconformable(self):
        with pytest.raises(ValueError):
            BlockSolver(sp.identity(3), sp.identity(4), sp.identity(3), sp.identity(3))

    def test_singular_schur_complement(self):
        eye = sp.identity(2, format="csr")
        # A22 - A21 A11^{-1} A12 = I - I = 0
        with pytest.raises(np.linalg.LinAlgError):
            solve_block_2x2(eye, eye, eye, eye, np.ones(2), np.ones(2))
