"""Remote estimate of the monitored chain and its match probabilities.

The match probability m_i(t) is the chance that the estimator, last fed state
i at age t, agrees with the true chain. These functions are evaluated
millions of times by the optimizers, so the class below caches P(t) on a
uniform grid (cubic splines per entry with exact uniformization as fallback)
and exposes closed-form antiderivatives for the fresh-time integrals.
"""

import math

import numpy as np
from scipy.interpolate import CubicSpline

from .ctmc import (
    GeneratorMatrix,
    ergodic_horizon,
    stationary_distribution,
    transition_probabilities,
)

MARTINGALE = "martingale"
MAP = "map"
KINDS = (MARTINGALE, MAP)

MONOTONE_SLACK = 1e-10


def _check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise ValueError(f"estimator kind must be one of {KINDS}, got {kind!r}")
    return kind


def estimate_at(kind: str, g: GeneratorMatrix, last_state: int, age: float) -> int:
    """Estimator output given the last reply reported `last_state`, `age` ago."""
    _check_kind(kind)
    if not 0 <= last_state < g.size:
        raise ValueError(f"state index {last_state} out of range")
    if kind == MARTINGALE:
        return last_state
    row = transition_probabilities(g, age).probs[last_state]
    return int(np.argmax(row))


def match_probability(kind: str, g: GeneratorMatrix, i: int, t: float) -> float:
    """P_{i, estimate(i,t)}(t), evaluated exactly by uniformization."""
    _check_kind(kind)
    row = transition_probabilities(g, t).probs[i]
    if kind == MARTINGALE:
        return float(row[i])
    return float(np.max(row))


def aggregate_p(kind: str, g: GeneratorMatrix, pi: np.ndarray, t: float) -> float:
    """p(t) = sum_i pi_i m_i(t)."""
    return float(sum(pi[i] * match_probability(kind, g, i, t) for i in range(g.size)))


class MatchProbability:
    """Cached m_i(t), p(t), their antiderivatives and the full splined P(t).

    The grid spans [0, horizon] where the chain is within 1e-10 total
    variation of stationarity; beyond it every quantity is held at its limit.
    """

    def __init__(
        self,
        g: GeneratorMatrix,
        kind: str = MARTINGALE,
        step: float | None = None,
        max_grid_points: int = 40_000,
    ):
        self.g = g
        self.kind = _check_kind(kind)
        self.pi = stationary_distribution(g).pi
        self.horizon = ergodic_horizon(g)
        lam = g.uniformization_rate
        if step is None:
            step = min(1e-2, 1e-2 / lam)
        n = int(math.ceil(self.horizon / step))
        if n > max_grid_points:
            n = max_grid_points
        self.times = np.linspace(0.0, self.horizon, n + 1)
        h = self.times[1] - self.times[0]
        p_step = transition_probabilities(g, h).probs
        mats = np.empty((n + 1, g.size, g.size))
        mats[0] = np.eye(g.size)
        for k in range(1, n + 1):
            mats[k] = mats[k - 1] @ p_step
        self._probs_spline = CubicSpline(self.times, mats, axis=0)
        if kind == MARTINGALE:
            m_vals = mats[:, np.arange(g.size), np.arange(g.size)]
            self.m_inf = self.pi.copy()
        else:
            m_vals = mats.max(axis=2)
            self.m_inf = np.full(g.size, float(np.max(self.pi)))
        self._m_spline = CubicSpline(self.times, m_vals, axis=0)
        self._m_anti = self._m_spline.antiderivative()
        self._m_anti_end = self._m_anti(self.horizon)
        self.p_inf = float(self.pi @ self.m_inf)

    # -- transition probabilities ------------------------------------------

    def probs(self, t: float) -> np.ndarray:
        """Splined P(t); rows of pi beyond the ergodic horizon."""
        if t >= self.horizon:
            return np.tile(self.pi, (self.g.size, 1))
        return self._probs_spline(t)

    # -- match probabilities -----------------------------------------------

    def m(self, i: int, t) -> float | np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.where(t >= self.horizon, self.m_inf[i], self._m_spline(np.minimum(t, self.horizon))[..., i])
        return float(out) if out.ndim == 0 else out

    def m_exact(self, i: int, t: float) -> float:
        return match_probability(self.kind, self.g, i, t)

    def p(self, t) -> float | np.ndarray:
        t = np.asarray(t, dtype=float)
        vals = self._m_spline(np.minimum(t, self.horizon)) @ self.pi
        out = np.where(t >= self.horizon, self.p_inf, vals)
        return float(out) if out.ndim == 0 else out

    # -- antiderivatives -----------------------------------------------------

    def integral_m(self, i: int, a: float, b: float) -> float:
        """Integral of m_i over [a, b]; linear continuation past the horizon."""
        return self._anti_m(i, b) - self._anti_m(i, a)

    def _anti_m(self, i: int, x: float) -> float:
        if x <= self.horizon:
            return float(self._m_anti(x)[i])
        return float(self._m_anti_end[i]) + self.m_inf[i] * (x - self.horizon)

    def integral_p(self, a: float, b: float) -> float:
        return float(sum(self.pi[i] * self.integral_m(i, a, b) for i in range(self.g.size)))

    # -- monotonicity gate ---------------------------------------------------

    def is_monotone_decreasing(self, horizon: float | None = None, grid: int = 1000, state: int | None = None) -> bool:
        """True iff p (or m_state) is non-increasing on the evaluation grid."""
        if grid < 100:
            raise ValueError("grid must be at least 100 points")
        t = np.linspace(0.0, horizon if horizon is not None else self.horizon, grid)
        vals = self.p(t) if state is None else self.m(state, t)
        return bool(np.all(np.diff(vals) <= MONOTONE_SLACK))


def estimator_segments(
    g: GeneratorMatrix, kind: str, horizon: float, scan_points: int = 2000
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Piecewise-constant estimator trajectories per last-received state.

    Returns (seg_ends, seg_states, n_segs) with seg_ends[s, k] the age at
    which segment k of state s ends (the final segment is unbounded) and
    seg_states[s, k] the estimate held there. Martingale trajectories are a
    single segment; MAP breakpoints are located by bisection on the exact
    argmax crossings.
    """
    _check_kind(kind)
    s = g.size
    if kind == MARTINGALE:
        ends = np.full((s, 1), np.inf)
        states = np.arange(s, dtype=np.int64).reshape(s, 1)
        return ends, states, np.ones(s, dtype=np.int64)

    grid = np.linspace(0.0, horizon, scan_points)
    all_ends, all_states = [], []
    for i in range(s):
        breaks = []
        ests = [estimate_at(kind, g, i, 0.0)]
        prev_t, prev_e = 0.0, ests[0]
        for t in grid[1:]:
            e = estimate_at(kind, g, i, float(t))
            if e != prev_e:
                lo, hi = prev_t, float(t)
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if estimate_at(kind, g, i, mid) == prev_e:
                        lo = mid
                    else:
                        hi = mid
                breaks.append(hi)
                ests.append(e)
                prev_e = e
            prev_t = float(t)
        all_ends.append(breaks + [np.inf])
        all_states.append(ests)
    n_seg = np.array([len(e) for e in all_ends], dtype=np.int64)
    max_seg = int(n_seg.max())
    ends = np.full((s, max_seg), np.inf)
    states = np.zeros((s, max_seg), dtype=np.int64)
    for i in range(s):
        ends[i, : n_seg[i]] = all_ends[i]
        states[i, : n_seg[i]] = all_states[i]
    return ends, states, n_seg
