"""Match-probability curves, MAP vs martingale estimates, segment extraction."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from freshquery.ctmc import stationary_distribution, transition_probabilities, validate_generator
from freshquery.estimator import (
    MatchProbability,
    aggregate_p,
    estimate_at,
    estimator_segments,
    match_probability,
)

from .conftest import binary_generator, binary_transition


def unidirectional_cycle(rate: float = 1.0):
    """3-state one-way ring; its match probability is non-monotone."""
    r = rate
    return validate_generator([[-r, r, 0.0], [0.0, -r, r], [r, 0.0, -r]])


class TestEstimateAt:
    def test_martingale_is_identity(self):
        g = binary_generator(1.0, 0.1)
        assert estimate_at("martingale", g, 0, 5.0) == 0
        assert estimate_at("martingale", g, 1, 5.0) == 1

    def test_map_short_age_keeps_state(self):
        g = binary_generator(1.0, 0.1)
        assert estimate_at("map", g, 0, 0.01) == 0
        assert estimate_at("map", g, 1, 0.01) == 1

    def test_map_long_age_goes_to_mode(self):
        # exp1 chain: stationary mode is state 1, so a stale state-0 reply flips.
        g = binary_generator(1.0, 0.1)
        assert estimate_at("map", g, 0, 50.0) == 1

    def test_map_tie_prefers_smaller_index(self):
        g = binary_generator(1.0, 1.0)
        assert estimate_at("map", g, 1, 50.0) == 0

    def test_unknown_kind(self):
        g = binary_generator(1.0, 1.0)
        with pytest.raises(ValueError):
            estimate_at("mle", g, 0, 1.0)


class TestMatchProbability:
    def test_martingale_is_diagonal(self):
        g = binary_generator(1.0, 0.1)
        for i in (0, 1):
            for t in (0.0, 0.3, 2.0):
                want = binary_transition(1.0, 0.1, t)[i, i]
                assert match_probability("martingale", g, i, t) == pytest.approx(want, abs=1e-12)

    def test_map_is_row_max(self):
        g = binary_generator(1.0, 0.1)
        for t in (0.0, 0.5, 3.0, 30.0):
            p = transition_probabilities(g, t).probs
            assert match_probability("map", g, 0, t) == pytest.approx(np.max(p[0]), abs=1e-12)

    def test_map_dominates_martingale(self):
        g = binary_generator(0.6, 0.4)
        for t in np.linspace(0.0, 5.0, 20):
            assert match_probability("map", g, 0, t) >= match_probability("martingale", g, 0, t) - 1e-14

    def test_aggregate_p(self):
        g = binary_generator(1.0, 0.1)
        pi = stationary_distribution(g).pi
        t = 0.8
        want = sum(pi[i] * match_probability("martingale", g, i, t) for i in range(2))
        assert aggregate_p("martingale", g, pi, t) == pytest.approx(want, abs=1e-14)


class TestMatchProbabilityCache:
    def test_spline_matches_exact(self):
        g = binary_generator(1.0, 0.1)
        mp = MatchProbability(g, "martingale")
        for t in np.linspace(0.0, 8.0, 40):
            for i in (0, 1):
                assert mp.m(i, t) == pytest.approx(mp.m_exact(i, t), abs=1e-9)

    def test_limit_values(self):
        # exp1: p_inf = sum(pi_i^2) = (1 + 100) / 121.
        g = binary_generator(1.0, 0.1)
        mp = MatchProbability(g, "martingale")
        assert mp.p_inf == pytest.approx(101.0 / 121.0, abs=1e-12)
        assert mp.m_inf[0] == pytest.approx(1.0 / 11.0, abs=1e-10)
        assert mp.m_inf[1] == pytest.approx(10.0 / 11.0, abs=1e-10)

    def test_integral_matches_quadrature(self):
        g = binary_generator(0.6, 0.4)
        mp = MatchProbability(g, "martingale")
        for a, b in ((0.0, 0.5), (0.3, 2.4), (1.0, 1.0)):
            num, _ = quad(lambda t: mp.m_exact(0, t), a, b, epsabs=1e-12)
            assert mp.integral_m(0, a, b) == pytest.approx(num, abs=1e-9)

    def test_integral_extends_past_horizon(self):
        g = binary_generator(1.0, 0.1)
        mp = MatchProbability(g, "martingale")
        h = mp.horizon if hasattr(mp, "horizon") else 0.0
        a, b = 1.0, 200.0
        closed = quad(lambda t: mp.m_exact(1, t), a, min(b, 60.0), epsabs=1e-12)[0]
        closed += (b - max(a, 60.0)) * (10.0 / 11.0)
        assert mp.integral_m(1, a, b) == pytest.approx(closed, abs=1e-6)
        assert h >= 0.0

    def test_monotone_detection(self):
        assert MatchProbability(binary_generator(1.0, 0.1), "martingale").is_monotone_decreasing()
        assert not MatchProbability(unidirectional_cycle(), "martingale").is_monotone_decreasing()

    def test_map_aggregate_nonincreasing_binary(self):
        mp = MatchProbability(binary_generator(0.6, 0.4), "map")
        ts = np.linspace(0.0, 10.0, 200)
        vals = np.array([mp.p(t) for t in ts])
        assert np.all(np.diff(vals) <= 1e-8)


class TestEstimatorSegments:
    def test_martingale_single_segment(self):
        g = binary_generator(1.0, 0.1)
        ends, states, n = estimator_segments(g, "martingale", 10.0)
        assert list(np.asarray(n).ravel()) == [1, 1]
        assert math.isinf(ends[0, 0]) and math.isinf(ends[1, 0])
        assert list(np.asarray(states)[:, 0]) == [0, 1]

    def test_map_breakpoint_matches_crossing(self):
        # exp1: MAP estimate from state 0 flips to 1 once P00(t) < P01(t).
        g = binary_generator(1.0, 0.1)
        ends, states, n = estimator_segments(g, "map", 60.0)
        # The flip time solves 1/11 + 10/11 e^{-1.1 t} = 1/2 ... crossing of row 0.
        t_star = -math.log((0.5 - 1.0 / 11.0) / (10.0 / 11.0)) / 1.1
        # Segments for starting state 0 live in the first block; find the flip.
        flips = [e for e in np.asarray(ends).ravel() if 0.0 < e < 60.0]
        assert any(abs(e - t_star) < 1e-6 for e in flips)
        assert np.asarray(n).ravel()[0] == 2

    def test_segments_cover_consistent_states(self):
        g = binary_generator(1.0, 0.1)
        ends, states, n = estimator_segments(g, "map", 60.0)
        ends = np.asarray(ends, dtype=float).reshape(g.size, -1)
        states = np.asarray(states, dtype=int).reshape(g.size, -1)
        nseg = np.asarray(n, dtype=int).ravel() if np.ndim(n) else None
        for i in range(g.size):
            prev = 0.0
            cols = nseg[i] if nseg is not None else ends.shape[1]
            for k in range(cols):
                mid = prev + 0.05 if math.isinf(ends[i, k]) else 0.5 * (prev + ends[i, k])
                assert estimate_at("map", g, i, mid) == states[i, k]
                prev = ends[i, k]
