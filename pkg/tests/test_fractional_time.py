import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracstep.fractional_time import (
    SolutionHistory,
    TimeGrid,
    compute_weights,
    discrete_caputo,
    history_combination,
    memory_coefficients,
    step_coefficient,
)

ALPHAS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


def caputo_by_loop(u, alpha, tau, n):
    """L1 derivative at t_n written directly as a sum over past levels."""
    b = [(j + 1) ** (1 - alpha) - j ** (1 - alpha) for j in range(n + 1)]
    acc = u[n]
    for j in range(1, n):
        acc -= (b[n - j - 1] - b[n - j]) * u[j]
    acc -= b[n - 1] * u[0]
    return acc * tau ** (-alpha) / math.gamma(2 - alpha)


class TestWeights:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_first_weight_is_one(self, alpha):
        assert compute_weights(alpha, 5).b[0] == 1.0

    def test_b1_half(self):
        assert compute_weights(0.5, 1).b[1] == pytest.approx(math.sqrt(2) - 1, rel=1e-15)

    def test_b3_alpha_03(self):
        # 4**0.7 - 3**0.7 from a 40-digit evaluation
        assert compute_weights(0.3, 3).b[3] == pytest.approx(0.4813465415711954191930550264790070443951, rel=1e-14)

    def test_matches_naive_formula(self):
        j = np.arange(50)
        naive = (j + 1.0) ** 0.4 - j**0.4
        np.testing.assert_allclose(compute_weights(0.6, 49).b, naive, rtol=1e-12)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_invariants_up_to_1000(self, alpha):
        n = 1000
        b = compute_weights(alpha, n).b
        assert np.all(b > 0)
        assert np.all(np.diff(b) < 0)
        j = np.arange(n + 1)
        assert np.all(b > (1 - alpha) * (j + 1.0) ** (-alpha))

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_alpha(self, bad):
        with pytest.raises(ValueError, match="0 < alpha < 1"):
            compute_weights(bad, 3)

    def test_rejects_negative_n(self):
        with pytest.raises(ValueError):
            compute_weights(0.5, -1)

    def test_weights_are_read_only(self):
        w = compute_weights(0.5, 3)
        with pytest.raises(ValueError):
            w.b[0] = 2.0

    @given(st.floats(0.01, 0.99), st.integers(0, 400))
    def test_telescoping(self, alpha, n):
        c = memory_coefficients(compute_weights(alpha, n), n)
        assert abs(c.sum() - 1.0) <= 10 * np.finfo(float).eps * max(n, 1)


class TestStepCoefficient:
    def test_gamma_anchor_values(self):
        assert math.gamma(1.0) == 1.0
        assert math.gamma(2.0) == 1.0
        assert math.gamma(1.5) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-15)

    def test_value(self):
        assert step_coefficient(0.5, 0.1) == pytest.approx(0.2802495608198964349655641216934400446927, rel=1e-14)


class TestTimeGrid:
    def test_nodes(self):
        g = TimeGrid(1.0, 8)
        assert g.tau == 0.125
        assert g.nodes[-1] == pytest.approx(1.0, abs=1e-15)
        assert np.all(np.diff(g.nodes) > 0)

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError):
            TimeGrid(1.0, 0)


class TestHistoryCombination:
    def test_constant_history(self):
        levels = np.full((7, 5), 3.25)
        H = history_combination(levels, compute_weights(0.4, 6), 6)
        np.testing.assert_allclose(H, 3.25, rtol=1e-14)

    def test_n_equals_one(self):
        w = compute_weights(0.7, 1)
        u0, u1 = np.array([1.0, 2.0]), np.array([-1.0, 4.0])
        H = history_combination(np.stack([u0, u1]), w, 1)
        np.testing.assert_allclose(H, (1 - w.b[1]) * u1 + w.b[1] * u0, rtol=1e-15)

    def test_random_history_against_loop(self):
        rng = np.random.default_rng(3)
        alpha, tau, n = 0.35, 0.2, 3
        levels = rng.normal(size=(n + 1, 4))
        w = compute_weights(alpha, n)
        fast = discrete_caputo(levels, w, tau, n)
        slow = np.array([caputo_by_loop(levels[:, i], alpha, tau, n) for i in range(4)])
        np.testing.assert_allclose(fast, slow, rtol=1e-13)

    def test_accepts_solution_history(self):
        h = SolutionHistory(3, 2)
        for k in range(4):
            h.append(np.full(3, float(k)))
        assert len(h) == 4
        H = history_combination(h, compute_weights(0.5, 3), 3)
        np.testing.assert_allclose(H, history_combination(h.levels, compute_weights(0.5, 3), 3))

    def test_too_few_weights(self):
        with pytest.raises(ValueError):
            history_combination(np.zeros((5, 2)), compute_weights(0.5, 2), 4)

    def test_too_few_levels(self):
        with pytest.raises(ValueError):
            history_combination(np.zeros((2, 2)), compute_weights(0.5, 4), 4)

    def test_non_finite(self):
        levels = np.zeros((3, 2))
        levels[1, 1] = np.nan
        with pytest.raises(FloatingPointError):
            history_combination(levels, compute_weights(0.5, 2), 2)


class TestDiscreteCaputo:
    def test_constant_gives_zero(self):
        u = np.ones(11)
        assert discrete_caputo(u, compute_weights(0.5, 10), 0.1, 10) == pytest.approx(0.0, abs=1e-13)

    @pytest.mark.parametrize("alpha", [0.3, 0.6, 0.9])
    def test_linear_exact(self, alpha):
        n, tau = 200, 0.005
        t = np.arange(n + 1) * tau
        w = compute_weights(alpha, n)
        for m in (1, 17, n):
            got = discrete_caputo(t, w, tau, m)
            assert abs(got - t[m] ** (1 - alpha) / math.gamma(2 - alpha)) < 1e-12

    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
    def test_quadratic_within_bound(self, alpha):
        for n in (4, 16, 64):
            tau = 1.0 / n
            t = np.arange(n + 1) * tau
            got = discrete_caputo(t**2, compute_weights(alpha, n), tau, n)
            exact = 2.0 / math.gamma(3 - alpha)
            assert abs(got - exact) <= 12.0 / math.gamma(2 - alpha) * tau ** (2 - alpha)

    def test_rejects_n_zero(self):
        with pytest.raises(ValueError):
            discrete_caputo(np.ones(2), compute_weights(0.5, 1), 0.1, 0)

    @settings(max_examples=50)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31 - 1))
    def test_linearity(self, a, c, seed):
        rng = np.random.default_rng(seed)
        u, v = rng.normal(size=(2, 9, 3))
        w = compute_weights(0.45, 8)
        lhs = discrete_caputo(a * u + c * v, w, 0.1, 8)
        rhs = a * discrete_caputo(u, w, 0.1, 8) + c * discrete_caputo(v, w, 0.1, 8)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)
