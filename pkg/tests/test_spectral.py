import math

import numpy as np
import pytest

from platenull.spectral import (Mode, evaluate_modal_sum, exact_test_solution,
                                modal_constants, modal_evolve, modal_rates,
                                similarity_matrix)

RHO = 2.5  # sqrt(rho^2 - 4) = 3/2, the benchmark damping


class TestModalRates:
    def test_benchmark_mode(self):
        eta1, eta2 = modal_rates(8.0, RHO)
        assert eta1 == pytest.approx(-16.0, rel=1e-15)
        assert eta2 == pytest.approx(-4.0, rel=1e-15)

    def test_unit_eigenvalue(self):
        eta1, eta2 = modal_rates(1.0, RHO)
        assert eta1 == pytest.approx(-2.0, rel=1e-15)
        assert eta2 == pytest.approx(-0.5, rel=1e-15)

    def test_vieta_identities(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            lam = rng.uniform(0.1, 50.0)
            rho = rng.uniform(2.01, 10.0)
            eta1, eta2 = modal_rates(lam, rho)
            assert eta1 * eta2 == pytest.approx(lam**2, rel=1e-12)
            assert eta1 + eta2 == pytest.approx(-rho * lam, rel=1e-12)
            assert eta1 < eta2 < 0

    def test_rejects_small_rho(self):
        with pytest.raises(ValueError):
            modal_rates(8.0, 2.0)
        with pytest.raises(ValueError):
            modal_rates(8.0, 1.5)


class TestModalConstants:
    def test_zero_data(self):
        assert modal_constants(0.0, 0.0, RHO) == (0.0, 0.0)

    def test_benchmark_values(self):
        c1, c2 = modal_constants(0.0, 1.0, RHO)
        assert c1 == pytest.approx(4.0 / 3.0, rel=1e-15)
        assert c2 == pytest.approx(-1.0 / 3.0, rel=1e-15)

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            a0, b0 = rng.standard_normal(2)
            rho = rng.uniform(2.01, 8.0)
            c = np.array(modal_constants(a0, b0, rho))
            got = similarity_matrix(rho) @ c
            np.testing.assert_allclose(got, [a0, b0], atol=1e-12)


class TestModalEvolve:
    def test_initial_time(self):
        mode = Mode(m=1, n=2, alpha0=0.3, beta0=-0.7)
        alpha, beta = modal_evolve(mode, RHO, 0.0)
        assert alpha == pytest.approx(0.3, abs=1e-14)
        assert beta == pytest.approx(-0.7, abs=1e-14)

    def test_satisfies_modal_ode(self):
        # finite-difference derivative against the 2x2 generator
        mode = Mode(m=2, n=2, alpha0=0.2, beta0=1.1)
        lam = mode.lam
        M = np.array([[0.0, lam], [-lam, -RHO * lam]])
        eps = 1e-6
        for t in (0.05, 0.3, 1.0):
            y_plus = np.array(modal_evolve(mode, RHO, t + eps))
            y_minus = np.array(modal_evolve(mode, RHO, t - eps))
            deriv = (y_plus - y_minus) / (2 * eps)
            y = np.array(modal_evolve(mode, RHO, t))
            np.testing.assert_allclose(deriv, M @ y, rtol=1e-5, atol=1e-7)

    def test_benchmark_coefficients(self):
        # lambda = 8, beta0 = 3/2: the closed-form exponential pair
        mode = Mode(m=2, n=2, alpha0=0.0, beta0=1.5)
        for t in (0.0, 0.1, 0.5, 1.7):
            alpha, beta = modal_evolve(mode, RHO, t)
            assert alpha == pytest.approx(math.exp(-4 * t) - math.exp(-16 * t),
                                          abs=1e-13)
            assert beta == pytest.approx(2 * math.exp(-16 * t) - 0.5 * math.exp(-4 * t),
                                         abs=1e-13)

    def test_envelope_decay(self):
        mode = Mode(m=3, n=1, alpha0=1.0, beta0=-2.0)
        eta1, eta2 = modal_rates(mode.lam, RHO)
        c1, c2 = modal_constants(mode.alpha0, mode.beta0, RHO)
        S = similarity_matrix(RHO)
        last_env = math.inf
        for t in np.linspace(0.0, 2.0, 40):
            alpha, beta = modal_evolve(mode, RHO, t)
            env = (abs(c1) * math.exp(eta1 * t) * np.abs(S[:, 0])
                   + abs(c2) * math.exp(eta2 * t) * np.abs(S[:, 1]))
            assert abs(alpha) <= env[0] * (1 + 1e-12)
            assert abs(beta) <= env[1] * (1 + 1e-12)
            assert env.sum() <= last_env * (1 + 1e-12)
            last_env = env.sum()

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            modal_evolve(Mode(m=1, n=1, alpha0=0.0, beta0=1.0), RHO, -0.1)


class TestExactTestSolution:
    def test_initial_data(self):
        x, y = 0.7, 1.2
        v, w = exact_test_solution(x, y, 0.0)
        assert v == pytest.approx(0.0, abs=1e-15)
        assert w == pytest.approx(1.5 * math.sin(2 * x) * math.sin(2 * y), rel=1e-14)

    def test_boundary_trace_vanishes(self):
        for t in (0.0, 0.4, 2.0):
            for x in (0.0, math.pi):
                v, w = exact_test_solution(x, 0.9, t)
                assert v == pytest.approx(0.0, abs=1e-15)
                assert w == pytest.approx(0.0, abs=1e-15)

    def test_quarter_point_value(self):
        v, _ = exact_test_solution(math.pi / 4, math.pi / 4, 0.25)
        assert v == pytest.approx(math.exp(-1) - math.exp(-4), rel=1e-14)
        assert v == pytest.approx(0.349564, abs=1e-6)

    def test_array_input(self):
        x = np.linspace(0, math.pi, 7)
        v, w = exact_test_solution(x, x, 0.3)
        assert v.shape == x.shape
        assert w.shape == x.shape


class TestEvaluateModalSum:
    def test_empty_sum(self):
        v, w = evaluate_modal_sum([], RHO, 0.3, 0.4, 1.0)
        assert v == pytest.approx(0.0) and w == pytest.approx(0.0)

    def test_matches_exact_test_solution(self):
        # beta0 = (a/2) * amplitude for a pure product-sine datum
        mode = Mode(m=2, n=2, alpha0=0.0, beta0=(math.pi / 2) * 1.5)
        rng = np.random.default_rng(13)
        xs = rng.uniform(0, math.pi, 25)
        ys = rng.uniform(0, math.pi, 25)
        for t in (0.0, 0.2, 1.0):
            v, w = evaluate_modal_sum([mode], RHO, xs, ys, t)
            ve, we = exact_test_solution(xs, ys, t)
            np.testing.assert_allclose(v, ve, atol=1e-12)
            np.testing.assert_allclose(w, we, atol=1e-12)

    def test_superposition(self):
        m1 = Mode(m=1, n=1, alpha0=0.4, beta0=0.1)
        m2 = Mode(m=2, n=3, alpha0=-0.2, beta0=0.9)
        x, y, t = 0.5, 1.1, 0.35
        v12, w12 = evaluate_modal_sum([m1, m2], RHO, x, y, t)
        v1, w1 = evaluate_modal_sum([m1], RHO, x, y, t)
        v2, w2 = evaluate_modal_sum([m2], RHO, x, y, t)
        assert v12 == pytest.approx(v1 + v2, rel=1e-13)
        assert w12 == pytest.approx(w1 + w2, rel=1e-13)

    def test_general_side_length(self):
        # lambda scales with (pi/a)^2
        mode = Mode(m=2, n=2, alpha0=0.0, beta0=1.0, a=2 * math.pi)
        assert mode.lam == pytest.approx(2.0, rel=1e-15)
