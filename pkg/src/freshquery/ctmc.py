"""Finite-state CTMC core: generator validation, P(t) = e^{Qt}, stationary vector.

The matrix exponential uses uniformization (Poisson-weighted powers of the
uniformized jump matrix), which is unconditionally stable for generator
matrices and gives a simple a priori truncation bound.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.stats import poisson

from .errors import (
    NegativeOffDiagonalError,
    NonSquareError,
    NumericalOverflowError,
    ReducibleError,
    RowSumNonzeroError,
    SingularSystemError,
)

ROW_SUM_TOL = 1e-12
UNIFORMIZATION_TAIL = 1e-12
DEFAULT_TERM_BUDGET = 200_000


@dataclass(frozen=True)
class GeneratorMatrix:
    """Validated CTMC generator. Construct via :func:`validate_generator`."""

    rates: np.ndarray

    @property
    def size(self) -> int:
        return self.rates.shape[0]

    @property
    def uniformization_rate(self) -> float:
        """Lambda = max_i |Q_ii|."""
        return float(np.max(-np.diag(self.rates)))

    @property
    def exit_rates(self) -> np.ndarray:
        return -np.diag(self.rates)

    def jump_probabilities(self) -> np.ndarray:
        """Embedded jump chain: off-diagonal rates normalized per row."""
        p = np.array(self.rates, dtype=float)
        np.fill_diagonal(p, 0.0)
        return p / self.exit_rates[:, None]


@dataclass(frozen=True)
class TransitionMatrix:
    t: float
    probs: np.ndarray


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray


def validate_generator(rates) -> GeneratorMatrix:
    """Check the generator invariants and freeze the matrix.

    Raises NonSquareError, NegativeOffDiagonalError, RowSumNonzeroError or
    ReducibleError on violation.
    """
    q = np.array(rates, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 2:
        raise NonSquareError(f"expected a square matrix with S >= 2, got shape {q.shape}")
    off = q.copy()
    np.fill_diagonal(off, 0.0)
    if np.any(off < 0.0):
        raise NegativeOffDiagonalError("off-diagonal rates must be non-negative")
    row_sums = q.sum(axis=1)
    if np.any(np.abs(row_sums) > ROW_SUM_TOL):
        bad = int(np.argmax(np.abs(row_sums)))
        raise RowSumNonzeroError(f"row {bad} sums to {row_sums[bad]:.3e}")
    graph = csr_matrix((off > 0.0).astype(int))
    n_comp, _ = connected_components(graph, directed=True, connection="strong")
    if n_comp != 1:
        raise ReducibleError("rate graph is not strongly connected")
    q.setflags(write=False)
    return GeneratorMatrix(rates=q)


def _poisson_truncation(mu: float, tail: float) -> int:
    """Smallest K with Poisson(mu) tail mass beyond K below ``tail``."""
    if mu <= 0.0:
        return 0
    k = int(poisson.isf(tail, mu))
    # isf can undershoot by a term; walk up until the tail bound holds.
    while poisson.sf(k, mu) > tail:
        k += 1
    return k


def transition_probabilities(
    g: GeneratorMatrix,
    t: float,
    term_budget: int = DEFAULT_TERM_BUDGET,
) -> TransitionMatrix:
    """P(t) = e^{Qt} by uniformization, entrywise error below 1e-10."""
    if not np.isfinite(t) or t < 0.0:
        raise ValueError(f"t must be finite and non-negative, got {t}")
    s = g.size
    lam = g.uniformization_rate
    mu = lam * t
    if mu == 0.0:
        return TransitionMatrix(t=t, probs=np.eye(s))
    n_terms = _poisson_truncation(mu, UNIFORMIZATION_TAIL)
    if n_terms > term_budget:
        raise NumericalOverflowError(
            f"uniformization needs {n_terms} terms for t*Lambda = {mu:.3g}, budget is {term_budget}"
        )
    p_unif = np.eye(s) + g.rates / lam
    weights = poisson.pmf(np.arange(n_terms + 1), mu)
    acc = weights[0] * np.eye(s)
    power = np.eye(s)
    for k in range(1, n_terms + 1):
        power = power @ p_unif
        acc += weights[k] * power
    # Renormalize the truncated tail mass back onto the rows.
    acc /= acc.sum(axis=1)[:, None]
    return TransitionMatrix(t=t, probs=acc)


def stationary_of_stochastic(p: np.ndarray) -> np.ndarray:
    """Stationary vector of a row-stochastic matrix via an augmented solve."""
    s = p.shape[0]
    a = p.T - np.eye(s)
    a[-1, :] = 1.0
    b = np.zeros(s)
    b[-1] = 1.0
    try:
        phi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    return phi


def stationary_distribution(g: GeneratorMatrix) -> StationaryDistribution:
    """Unique pi with pi Q = 0, by replacing one balance equation with normalization."""
    s = g.size
    a = g.rates.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(s)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    pi.setflags(write=False)
    return StationaryDistribution(pi=pi)


def ergodic_horizon(g: GeneratorMatrix, tol: float = 1e-10, t0: float = 1.0) -> float:
    """Doubling search for T with max_i TV(P(T) row i, pi) < tol."""
    pi = stationary_distribution(g).pi
    t = t0 / max(g.uniformization_rate, 1e-12)
    for _ in range(80):
        probs = transition_probabilities(g, t).probs
        tv = 0.5 * np.max(np.abs(probs - pi[None, :]).sum(axis=1))
        if tv < tol:
            return t
        t *= 2.0
    raise NumericalOverflowError("ergodic horizon search did not converge")
