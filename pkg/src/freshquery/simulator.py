"""Discrete-event Monte Carlo of the query/reply renewal cycles.

The event loop simulates exact CTMC jump paths (no time discretization), so
the empirical mean binary freshness is an unbiased oracle for the analytic
evaluator. Heavy lifting happens in the selected kernel backend.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ctmc import GeneratorMatrix, ergodic_horizon, stationary_distribution
from .delays import Delay, DiscreteAtoms, Exponential
from .estimator import estimator_segments
from .freshness import (
    ConstantWait,
    DelayIndependent,
    FullTable,
    PerStateThreshold,
    StateIndependentTable,
    ThresholdPolicy,
    WaitingPolicy,
    ZeroWait,
)
from .sim import BACKEND, run_cycles


@dataclass(frozen=True)
class SimConfig:
    cycles: int = 1_000_000
    seed: int = 0
    burn_in: int = 1_000
    n_batches: int = 100

    def __post_init__(self):
        if not self.cycles > self.burn_in >= 0:
            raise ValueError("need cycles > burn_in >= 0")


@dataclass(frozen=True)
class SimResult:
    mbf_hat: float
    stderr: float
    phi_hat: np.ndarray
    mean_cycle: float
    p_tilde_hat: np.ndarray
    seed: int
    cycles: int
    backend: str

    def to_row(self) -> dict:
        return {
            "mbf_hat": self.mbf_hat,
            "stderr": self.stderr,
            "phi_hat": list(self.phi_hat),
            "mean_cycle": self.mean_cycle,
            "seed": self.seed,
            "cycles": self.cycles,
        }


def _encode_delay(dist: Delay):
    """(kind, values, cumprobs, rate) tuple in kernel form."""
    if isinstance(dist, DiscreteAtoms):
        return 0, np.array(dist.values, dtype=float), np.cumsum(dist.probs), 0.0
    if isinstance(dist, Exponential):
        return 1, np.zeros(1), np.ones(1), float(dist.rate)
    raise ValueError(f"simulator supports atomic or exponential delays, got {type(dist).__name__}")


def _encode_policy(policy: WaitingPolicy, s: int, d_vals: np.ndarray, d_kind: int):
    """(mode, table, vec, gamma) in kernel form."""
    nd = max(len(d_vals), 1)
    table = np.zeros((s, nd))
    vec = np.zeros(s)
    if isinstance(policy, (ZeroWait, ConstantWait, DelayIndependent)):
        for i in range(s):
            vec[i] = policy.wait(i, 0.0)
        return 2, table, vec, 0.0
    if isinstance(policy, (ThresholdPolicy,)):
        gamma = policy.gamma if not math.isinf(policy.gamma) else 1e300
        return 1, table, vec, float(gamma)
    if isinstance(policy, (StateIndependentTable, FullTable, PerStateThreshold)):
        if d_kind != 0 and not isinstance(policy, PerStateThreshold):
            raise ValueError("tabulated policies need an atomic backward delay")
        if d_kind != 0:
            raise ValueError("per-state thresholds over continuous delays are not supported in the kernel")
        for i in range(s):
            for j, dv in enumerate(d_vals):
                table[i, j] = policy.wait(i, float(dv))
        return 0, table, vec, 0.0
    raise ValueError(f"unsupported policy type {type(policy).__name__}")


def simulate(
    g: GeneratorMatrix,
    kind: str,
    y: Delay,
    d: Delay,
    policy: WaitingPolicy,
    cfg: SimConfig,
) -> SimResult:
    """Monte Carlo estimate of the MBF under `policy`; deterministic given the seed."""
    s = g.size
    pi = stationary_distribution(g).pi
    horizon = ergodic_horizon(g)
    seg_ends, seg_states, n_segs = estimator_segments(g, kind, horizon)

    y_kind, y_vals, y_cum, y_rate = _encode_delay(y)
    d_kind, d_vals, d_cum, d_rate = _encode_delay(d)
    mode, table, vec, gamma = _encode_policy(policy, s, d_vals, d_kind)

    jump = g.jump_probabilities()
    out = run_cycles(
        np.uint64(cfg.seed),
        cfg.cycles,
        cfg.burn_in,
        cfg.n_batches,
        np.ascontiguousarray(g.exit_rates),
        np.ascontiguousarray(np.cumsum(jump, axis=1)),
        np.cumsum(pi),
        y_kind, y_vals, y_cum, y_rate,
        d_kind, d_vals, d_cum, d_rate,
        mode, table, vec, float(gamma), float(policy.w_max),
        np.ascontiguousarray(seg_ends),
        np.ascontiguousarray(seg_states),
        np.ascontiguousarray(n_segs),
    )

    bf = out["batch_fresh"]
    bt = out["batch_time"]
    mbf_hat = float(bf.sum() / bt.sum())
    ratios = bf / bt
    stderr = float(np.std(ratios, ddof=1) / math.sqrt(len(ratios)))
    phi_counts = out["phi_counts"].astype(float)
    phi_hat = phi_counts / phi_counts.sum()
    trans = out["trans_counts"].astype(float)
    row_sums = trans.sum(axis=1)
    p_tilde_hat = np.divide(trans, row_sums[:, None], out=np.zeros_like(trans), where=row_sums[:, None] > 0)
    return SimResult(
        mbf_hat=mbf_hat,
        stderr=stderr,
        phi_hat=phi_hat,
        mean_cycle=float(out["sum_cycle"] / out["n_used"]),
        p_tilde_hat=p_tilde_hat,
        seed=cfg.seed,
        cycles=cfg.cycles,
        backend=BACKEND,
    )


def jump_path_fresh_time(
    g: GeneratorMatrix,
    start_state: int,
    estimator_trajectory,
    span: float,
    rng: np.random.Generator,
) -> float:
    """Exact fresh time over [0, span] for one sampled jump path.

    `estimator_trajectory` is a sequence of (end_age, estimate) pairs; the
    final end_age may be math.inf.
    """
    if span < 0.0:
        raise ValueError("span must be non-negative")
    exit_rates = g.exit_rates
    jump = g.jump_probabilities()
    segs = list(estimator_trajectory)
    fresh = 0.0
    t = 0.0
    cur = start_state
    k_seg = 0
    while t < span:
        dt = rng.exponential(1.0 / exit_rates[cur])
        t_next = min(t + dt, span)
        pos = t
        while pos < t_next:
            end, est = segs[k_seg]
            e = min(end, t_next)
            if est == cur:
                fresh += e - pos
            pos = e
            if end <= t_next:
                k_seg += 1
            else:
                break
        if t + dt >= span:
            break
        cur = int(rng.choice(g.size, p=jump[cur]))
        t = t + dt
    return fresh
