"""Average-reward semi-Markov decision process solver (policy iteration).

Models are unichain by assumption; the evaluation step anchors the bias at
state 0 and solves the linear system directly, which is exact for the small
state spaces used here.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSojournError, NonStochasticRowError, NoConvergenceError
from .ctmc import stationary_of_stochastic

ROW_TOL = 1e-10
IMPROVE_TOL = 1e-12
UNIMPROVABLE_TOL = 1e-9


@dataclass
class SmdpModel:
    """Finite SMDP with per-state action lists.

    actions[s]   : 1-d array of wait times (ascending)
    transition[s]: (n_actions_s, S) row-stochastic matrix
    reward[s]    : (n_actions_s,) expected reward per sojourn
    sojourn[s]   : (n_actions_s,) expected sojourn time, strictly positive
    """

    actions: list
    transition: list
    reward: list
    sojourn: list

    @property
    def n_states(self) -> int:
        return len(self.actions)

    def validate(self):
        for s in range(self.n_states):
            rows = np.asarray(self.transition[s])
            if np.any(np.abs(rows.sum(axis=1) - 1.0) > ROW_TOL):
                raise NonStochasticRowError(f"state {s} has a non-stochastic transition row")
            if np.any(np.asarray(self.sojourn[s]) <= 0.0):
                raise NonPositiveSojournError(f"state {s} has a non-positive sojourn time")


@dataclass
class SmdpSolution:
    policy: np.ndarray  # action index per state
    waits: np.ndarray  # chosen wait time per state
    gain: float
    bias: np.ndarray
    iterations: int
    gain_trace: list


def evaluate_policy(p: np.ndarray, r: np.ndarray, h: np.ndarray, anchor: int = 0):
    """Solve r - gain*h + P b = b with b[anchor] = 0; returns (gain, bias)."""
    s = p.shape[0]
    a = np.eye(s) - p
    a[:, anchor] = h  # the anchor bias column is replaced by the gain unknown
    x = np.linalg.solve(a, r)
    gain = x[anchor]
    bias = x.copy()
    bias[anchor] = 0.0
    return float(gain), bias


def policy_gain_ratio(p: np.ndarray, r: np.ndarray, h: np.ndarray) -> float:
    """Renewal-reward gain of a fixed policy: phi.r / phi.h."""
    phi = stationary_of_stochastic(p)
    return float(phi @ r) / float(phi @ h)


def policy_iteration(model: SmdpModel, max_iter: int = 1000, anchor: int = 0) -> SmdpSolution:
    """Howard policy iteration; ties broken toward the smaller wait time."""
    model.validate()
    s = model.n_states
    policy = np.zeros(s, dtype=np.int64)
    gain_trace = []
    for it in range(max_iter):
        p_pi = np.array([model.transition[st][policy[st]] for st in range(s)])
        r_pi = np.array([model.reward[st][policy[st]] for st in range(s)])
        h_pi = np.array([model.sojourn[st][policy[st]] for st in range(s)])
        gain, bias = evaluate_policy(p_pi, r_pi, h_pi, anchor=anchor)
        gain_trace.append(gain)
        new_policy = policy.copy()
        for st in range(s):
            q = (
                np.asarray(model.reward[st])
                - gain * np.asarray(model.sojourn[st])
                + np.asarray(model.transition[st]) @ bias
            )
            best = float(np.max(q))
            if q[policy[st]] < best - IMPROVE_TOL:
                # first index within tolerance of the max = smallest wait
                new_policy[st] = int(np.argmax(q >= best - IMPROVE_TOL))
        if np.array_equal(new_policy, policy):
            waits = np.array([model.actions[st][policy[st]] for st in range(s)])
            return SmdpSolution(
                policy=policy, waits=waits, gain=gain, bias=bias, iterations=it + 1, gain_trace=gain_trace
            )
        policy = new_policy
    raise NoConvergenceError(f"policy iteration did not converge in {max_iter} steps")


def unimprovable(model: SmdpModel, sol: SmdpSolution, tol: float = UNIMPROVABLE_TOL) -> bool:
    """Check the optimality condition r - g h + P b <= b + tol for all (s, a)."""
    for st in range(model.n_states):
        q = (
            np.asarray(model.reward[st])
            - sol.gain * np.asarray(model.sojourn[st])
            + np.asarray(model.transition[st]) @ sol.bias
        )
        if np.any(q > sol.bias[st] + tol):
            return False
    return True
