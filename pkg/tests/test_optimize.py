"""Policy synthesis: Dinkelbach fixed point, thresholds, SMDP policies."""

import math

import numpy as np
import pytest

from freshquery.delays import Deterministic, DiscreteAtoms, Exponential
from freshquery.freshness import EvalContext, ThresholdPolicy, mbf_analytic
from freshquery.optimize import (
    PFun,
    constant_wait_policy,
    delay_independent_policy,
    eq_objective,
    greedy_policy,
    optimal_policy,
    optimal_wait_for_theta,
    state_independent_policy,
    threshold_gamma,
    zero_wait_policy,
)

from .conftest import binary_generator


W_MAX = 1.5


def exp1_ctx(d1: float = 2.0) -> EvalContext:
    g = binary_generator(1.0, 0.1)
    return EvalContext(g, "martingale", Deterministic(0.0), DiscreteAtoms([0.0, d1], [0.5, 0.5]))


def binary_threshold_setup(alpha: float, beta: float, rate: float):
    """Binary chain with Y ~ Exp(rate), D = 0, so Z is exponential."""
    g = binary_generator(alpha, beta)
    ctx = EvalContext(g, "martingale", Exponential(rate), Deterministic(0.0))
    return ctx, PFun.aggregate(ctx)


def closed_form_objective(alpha, beta, rate, theta, w):
    """Independent oracle for the linearized objective at d = 0.

    p(t) = c0 + c1 e^{-r t} with c0 = pi0^2 + pi1^2, c1 = 2 pi0 pi1, r = alpha+beta;
    L(w) = int_0^w (p - theta) dt + int_0^inf (p(u + w) - theta) e^{-rate u} du.
    """
    r = alpha + beta
    pi0, pi1 = beta / r, alpha / r
    c0, c1 = pi0**2 + pi1**2, 2.0 * pi0 * pi1
    head = (c0 - theta) * w + c1 * (1.0 - np.exp(-r * w)) / r
    tail = (c0 - theta) / rate + c1 * np.exp(-r * w) / (r + rate)
    return head + tail


class TestThresholdGamma:
    def test_worked_case(self):
        # alpha = beta = 1, Z ~ Exp(1), theta = 0.6: the threshold is -ln(0.6)/2.
        ctx, pf = binary_threshold_setup(1.0, 1.0, 1.0)
        gamma = threshold_gamma(pf, ctx.z, 0.6, w_max=W_MAX, d_max=0.0)
        assert gamma == pytest.approx(-0.5 * math.log(0.6), abs=1e-8)

    def test_theta_below_limit_gives_infinite_threshold(self):
        ctx, pf = binary_threshold_setup(1.0, 1.0, 1.0)
        assert math.isinf(threshold_gamma(pf, ctx.z, 0.4, w_max=W_MAX, d_max=0.0))

    def test_high_theta_gives_zero(self):
        ctx, pf = binary_threshold_setup(1.0, 1.0, 4.0)
        # l(0) = E[p(Z)] < theta for theta close to 1.
        assert threshold_gamma(pf, ctx.z, 0.995, w_max=W_MAX, d_max=0.0) == 0.0

    def test_brute_force_grid_agreement(self):
        rng = np.random.default_rng(42)
        w_grid = np.arange(0.0, W_MAX + 1e-12, 1e-4)
        for _ in range(5):
            alpha, beta = rng.uniform(0.3, 2.0, size=2)
            rate = rng.uniform(0.5, 2.0)
            theta = rng.uniform(0.55, 0.95)
            ctx, pf = binary_threshold_setup(alpha, beta, rate)
            gamma = threshold_gamma(pf, ctx.z, theta, w_max=W_MAX, d_max=0.0)
            w_closed = min(max(gamma, 0.0), W_MAX)
            vals = closed_form_objective(alpha, beta, rate, theta, w_grid)
            w_brute = w_grid[int(np.argmax(vals))]
            assert abs(w_closed - w_brute) < 1e-3


class TestOptimalWaitForTheta:
    def test_matches_threshold_when_monotone_and_continuous(self):
        ctx, pf = binary_threshold_setup(1.0, 0.4, 1.3)
        theta = 0.8
        gamma = threshold_gamma(pf, ctx.z, theta, w_max=W_MAX, d_max=0.0)
        w = optimal_wait_for_theta(pf, ctx.z, 0.0, theta, W_MAX, p_monotone=True, d_max=0.0)
        assert w == pytest.approx(min(max(gamma, 0.0), W_MAX), abs=1e-9)

    def test_atomic_z_endpoints(self):
        ctx = exp1_ctx(2.0)
        pf = PFun.aggregate(ctx)
        # theta below p(inf): waiting longer always helps, so w = W_max.
        assert optimal_wait_for_theta(pf, ctx.z, 0.0, 0.5, W_MAX, True) == W_MAX
        # theta at/above p(d): no wait can reach it, so w = 0.
        assert optimal_wait_for_theta(pf, ctx.z, 0.0, 0.9999, W_MAX, True) == 0.0

    def test_grid_path_maximizes_objective(self):
        ctx = exp1_ctx(1.0)
        pf = PFun.aggregate(ctx)
        theta = 0.9
        w = optimal_wait_for_theta(pf, ctx.z, 1.0, theta, W_MAX, p_monotone=False)
        vals = [eq_objective(pf, ctx.z, 1.0, x, theta) for x in np.linspace(0.0, W_MAX, 301)]
        assert eq_objective(pf, ctx.z, 1.0, w, theta) >= max(vals) - 1e-9


class TestStateIndependent:
    def test_dinkelbach_fixed_point(self):
        res = state_independent_policy(exp1_ctx(2.0), w_max=W_MAX)
        assert abs(res.j_star) < 1e-7
        assert res.theta == pytest.approx(res.mbf, abs=1e-6)

    def test_beats_constant_and_zero_wait(self):
        ctx = exp1_ctx(1.0)
        si = state_independent_policy(ctx, w_max=W_MAX).mbf
        cw = constant_wait_policy(ctx, w_max=W_MAX).mbf
        zw = zero_wait_policy(ctx, w_max=W_MAX).mbf
        assert si >= cw - 1e-9
        assert cw >= zw - 1e-9

    def test_continuous_backward_delay_gives_threshold_policy(self):
        g = binary_generator(1.0, 0.1)
        ctx = EvalContext(g, "martingale", Deterministic(0.0), Exponential(1.0))
        res = state_independent_policy(ctx, w_max=W_MAX)
        assert isinstance(res.policy, ThresholdPolicy)
        assert abs(res.j_star) < 1e-7
        assert res.theta == pytest.approx(res.mbf, abs=1e-6)


class TestGreedy:
    def test_lower_bound_is_honest(self):
        for d1 in (0.1, 1.0, 3.0):
            res = greedy_policy(exp1_ctx(d1), w_max=W_MAX)
            assert res.mbf >= res.lower_bound - 1e-6


class TestSmdpPolicies:
    def test_delay_independent_gain_matches_analytic(self):
        res = delay_independent_policy(exp1_ctx(2.0), w_max=W_MAX)
        assert res.gain == pytest.approx(res.mbf, abs=1e-9)

    def test_optimal_gain_matches_analytic(self):
        res = optimal_policy(exp1_ctx(2.0), w_max=W_MAX)
        assert res.gain == pytest.approx(res.mbf, abs=1e-9)

    def test_optimal_dominates_all(self):
        ctx = exp1_ctx(0.5)
        opt = optimal_policy(ctx, w_max=W_MAX).mbf
        for synth in (
            zero_wait_policy,
            constant_wait_policy,
            state_independent_policy,
            delay_independent_policy,
        ):
            assert opt >= synth(ctx, w_max=W_MAX).mbf - 1e-6

    def test_optimal_structure_slow_asymmetric_chain(self):
        # exp1 at d1 = 2: wait only on a fresh state-0 reply (interior wait) and
        # on a stale state-1 reply (full wait); query immediately otherwise.
        res = optimal_policy(exp1_ctx(2.0), w_max=W_MAX)
        p = res.policy
        assert 0.0 < p.wait(0, 0.0) < W_MAX
        assert p.wait(1, 2.0) == pytest.approx(W_MAX, abs=1e-6)
        assert p.wait(0, 2.0) == pytest.approx(0.0, abs=1e-6)
        assert p.wait(1, 0.0) == pytest.approx(0.0, abs=1e-6)

    def test_continuous_backward_delay_discretized(self):
        g = binary_generator(1.0, 0.1)
        ctx = EvalContext(g, "martingale", Deterministic(0.0), Exponential(1.0))
        res = delay_independent_policy(ctx, w_max=W_MAX)
        assert 0.0 < res.mbf < 1.0
        # The gain is exact on the 32-atom quantile stand-in for D, while the
        # analytic value uses the true exponential D; only discretization error
        # separates them.
        assert res.gain == pytest.approx(res.mbf, abs=1e-3)
