"""Shared fixtures and helpers for the freshquery test suite."""

import numpy as np
import pytest

from freshquery.ctmc import GeneratorMatrix, validate_generator
from freshquery.delays import Deterministic, DiscreteAtoms


def binary_generator(alpha: float, beta: float) -> GeneratorMatrix:
    """Two-state chain: leaves state 0 at rate alpha, state 1 at rate beta."""
    return validate_generator([[-alpha, alpha], [beta, -beta]])


def binary_transition(alpha: float, beta: float, t: float) -> np.ndarray:
    """Closed-form transition matrix for the two-state chain."""
    r = alpha + beta
    pi0 = beta / r
    pi1 = alpha / r
    e = np.exp(-r * t)
    return np.array(
        [
            [pi0 + pi1 * e, pi1 - pi1 * e],
            [pi0 - pi0 * e, pi1 + pi0 * e],
        ]
    )


def random_generator(rng: np.random.Generator, size: int) -> GeneratorMatrix:
    """Dense random irreducible generator with rates in [0.1, 2]."""
    q = rng.uniform(0.1, 2.0, size=(size, size))
    np.fill_diagonal(q, 0.0)
    q -= np.diag(q.sum(axis=1))
    return validate_generator(q)


def random_atoms(rng: np.random.Generator, max_atoms: int = 3) -> DiscreteAtoms:
    """Random atomic delay with 1-3 distinct non-negative support points."""
    n = int(rng.integers(1, max_atoms + 1))
    values = np.sort(rng.uniform(0.0, 2.0, size=n))
    while n > 1 and np.min(np.diff(values)) < 1e-6:
        values = np.sort(rng.uniform(0.0, 2.0, size=n))
    probs = rng.uniform(0.2, 1.0, size=n)
    probs /= probs.sum()
    return DiscreteAtoms(values, probs)


def stationary_by_eig(q: np.ndarray) -> np.ndarray:
    """Independent stationary-distribution oracle via left eigenvectors."""
    w, v = np.linalg.eig(q.T)
    k = int(np.argmin(np.abs(w)))
    pi = np.real(v[:, k])
    return pi / pi.sum()




def state_independent_instance(seed: int):
    """Random chain + atomic delays + random state-independent wait table."""
    from freshquery.freshness import StateIndependentTable

    rng = np.random.default_rng(seed)
    g = random_generator(rng, int(rng.integers(2, 6)))
    y = random_atoms(rng)
    d = random_atoms(rng)
    w_max = 1.5
    waits = rng.uniform(0.0, w_max, size=len(d.values))
    policy = StateIndependentTable(d.values, waits, w_max)
    return g, y, d, policy


@pytest.fixture
def exp1_generator() -> GeneratorMatrix:
    return binary_generator(1.0, 0.1)


@pytest.fixture
def det0() -> DiscreteAtoms:
    return Deterministic(0.0)
