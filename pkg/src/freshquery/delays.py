"""Forward/backward delay distributions and their convolutions.

Supported families are deterministic values, finite atom sets and
exponentials; pairwise convolutions stay within {finite atoms,
shifted-exponential mixture, hypoexponential}, which covers every
experiment plus the absolutely-continuous case the threshold policy needs.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UnsupportedPairError

ATOM_MERGE_TOL = 1e-12
PROB_TOL = 1e-12


class Delay:
    """Common interface for delay distributions (and combined delays)."""

    is_atomic = False
    is_absolutely_continuous = False

    def cdf(self, x: float) -> float:
        raise NotImplementedError

    def sf(self, x: float) -> float:
        return 1.0 - self.cdf(x)

    def pdf(self, x: float) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def integrated_sf(self, x: float) -> float:
        """Integral of the survival function over [x, infinity)."""
        raise NotImplementedError

    def truncation(self, eps: float = 1e-13) -> float:
        """A point T with sf(T) <= eps."""
        raise NotImplementedError

    def shifts(self) -> np.ndarray:
        """Locations where the survival function is kinked (for quadrature splits)."""
        return np.array([])

    def sample(self, rng: np.random.Generator) -> float:
        raise NotImplementedError


# `CombinedDelay` is any Delay returned by convolve(); kept as an alias so the
# intent is visible in signatures.
CombinedDelay = Delay


@dataclass(frozen=True)
class DiscreteAtoms(Delay):
    """Finite support: atoms at `values` with probabilities `probs`."""

    values: np.ndarray
    probs: np.ndarray
    is_atomic = True

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if values.shape != probs.shape or values.ndim != 1 or values.size == 0:
            raise ValueError("atoms need matching 1-d value/probability arrays")
        if np.any(values < 0.0):
            raise ValueError("atom values must be non-negative")
        if np.any(probs <= 0.0):
            raise ValueError("atom probabilities must be strictly positive")
        if abs(probs.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"atom probabilities sum to {probs.sum()!r}, expected 1")
        order = np.argsort(values)
        values = values[order]
        probs = probs[order]
        if values.size > 1 and np.min(np.diff(values)) < ATOM_MERGE_TOL:
            raise ValueError("atom values must be distinct")
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_cum", np.cumsum(probs))

    def cdf(self, x):
        return float(self.probs[self.values <= x].sum())

    def mean(self):
        return float(self.values @ self.probs)

    def integrated_sf(self, x):
        return float(self.probs @ np.maximum(self.values - x, 0.0))

    def truncation(self, eps=1e-13):
        return float(self.values[-1])

    def shifts(self):
        return self.values

    def sample(self, rng):
        u = rng.random()
        return float(self.values[int(np.searchsorted(self._cum, u, side="right").clip(0, len(self.values) - 1))])


def Deterministic(value: float) -> DiscreteAtoms:
    """Point mass at `value`."""
    return DiscreteAtoms(values=np.array([float(value)]), probs=np.array([1.0]))


@dataclass(frozen=True)
class Exponential(Delay):
    rate: float
    is_absolutely_continuous = True

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError("exponential rate must be positive")

    def cdf(self, x):
        return 0.0 if x < 0.0 else 1.0 - math.exp(-self.rate * x)

    def pdf(self, x):
        return 0.0 if x < 0.0 else self.rate * math.exp(-self.rate * x)

    def mean(self):
        return 1.0 / self.rate

    def integrated_sf(self, x):
        if x < 0.0:
            return 1.0 / self.rate - x
        return math.exp(-self.rate * x) / self.rate

    def truncation(self, eps=1e-13):
        return -math.log(eps) / self.rate

    def sample(self, rng):
        return float(-math.log1p(-rng.random()) / self.rate)


@dataclass(frozen=True)
class ShiftedExpMixture(Delay):
    """Mixture over k of (shift_k + Exponential(rate)); the atoms*exp convolution."""

    shifts_: np.ndarray
    weights: np.ndarray
    rate: float
    is_absolutely_continuous = True

    def cdf(self, x):
        acc = 0.0
        for a, w in zip(self.shifts_, self.weights):
            if x > a:
                acc += w * (1.0 - math.exp(-self.rate * (x - a)))
        return acc

    def pdf(self, x):
        acc = 0.0
        for a, w in zip(self.shifts_, self.weights):
            if x >= a:
                acc += w * self.rate * math.exp(-self.rate * (x - a))
        return acc

    def mean(self):
        return float(self.shifts_ @ self.weights) + 1.0 / self.rate

    def integrated_sf(self, x):
        acc = 0.0
        for a, w in zip(self.shifts_, self.weights):
            if x <= a:
                acc += w * ((a - x) + 1.0 / self.rate)
            else:
                acc += w * math.exp(-self.rate * (x - a)) / self.rate
        return acc

    def truncation(self, eps=1e-13):
        return float(np.max(self.shifts_)) - math.log(eps) / self.rate

    def shifts(self):
        return self.shifts_

    def sample(self, rng):
        u = rng.random()
        cum = np.cumsum(self.weights)
        k = int(np.searchsorted(cum, u, side="right").clip(0, len(self.weights) - 1))
        return float(self.shifts_[k]) - math.log1p(-rng.random()) / self.rate


@dataclass(frozen=True)
class Hypoexponential(Delay):
    """Sum of two independent exponentials (Erlang-2 when rates coincide)."""

    rate1: float
    rate2: float
    is_absolutely_continuous = True
    _equal: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "_equal", abs(self.rate1 - self.rate2) < 1e-12 * max(self.rate1, self.rate2))

    def sf(self, x):
        if x < 0.0:
            return 1.0
        l1, l2 = self.rate1, self.rate2
        if self._equal:
            return (1.0 + l1 * x) * math.exp(-l1 * x)
        return (l2 * math.exp(-l1 * x) - l1 * math.exp(-l2 * x)) / (l2 - l1)

    def cdf(self, x):
        return 1.0 - self.sf(x)

    def pdf(self, x):
        if x < 0.0:
            return 0.0
        l1, l2 = self.rate1, self.rate2
        if self._equal:
            return l1 * l1 * x * math.exp(-l1 * x)
        return l1 * l2 / (l2 - l1) * (math.exp(-l1 * x) - math.exp(-l2 * x))

    def mean(self):
        return 1.0 / self.rate1 + 1.0 / self.rate2

    def integrated_sf(self, x):
        if x < 0.0:
            return self.mean() - x
        l1, l2 = self.rate1, self.rate2
        if self._equal:
            return (2.0 + l1 * x) * math.exp(-l1 * x) / l1
        return (l2 / l1 * math.exp(-l1 * x) - l1 / l2 * math.exp(-l2 * x)) / (l2 - l1)

    def truncation(self, eps=1e-13):
        t = self.mean()
        while self.sf(t) > eps:
            t *= 2.0
        return t

    def sample(self, rng):
        a = -math.log1p(-rng.random()) / self.rate1
        b = -math.log1p(-rng.random()) / self.rate2
        return a + b


def _merge_atoms(values, probs):
    order = np.argsort(values)
    values = np.asarray(values)[order]
    probs = np.asarray(probs)[order]
    out_v, out_p = [values[0]], [probs[0]]
    for v, p in zip(values[1:], probs[1:]):
        if v - out_v[-1] < ATOM_MERGE_TOL:
            out_p[-1] += p
        else:
            out_v.append(v)
            out_p.append(p)
    return np.array(out_v), np.array(out_p)


def convolve(a: Delay, b: Delay) -> CombinedDelay:
    """Distribution of the independent sum a + b (exact closed forms only)."""
    if a.is_atomic and b.is_atomic:
        vals = np.add.outer(a.values, b.values).ravel()
        probs = np.multiply.outer(a.probs, b.probs).ravel()
        v, p = _merge_atoms(vals, probs)
        return DiscreteAtoms(values=v, probs=p)
    if a.is_atomic and isinstance(b, Exponential):
        return ShiftedExpMixture(shifts_=a.values.copy(), weights=a.probs.copy(), rate=b.rate)
    if b.is_atomic and isinstance(a, Exponential):
        return ShiftedExpMixture(shifts_=b.values.copy(), weights=b.probs.copy(), rate=a.rate)
    if isinstance(a, Exponential) and isinstance(b, Exponential):
        return Hypoexponential(rate1=a.rate, rate2=b.rate)
    raise UnsupportedPairError(
        f"no closed-form convolution for {type(a).__name__} * {type(b).__name__}; discretize first"
    )


def tail_cdf_shifted(z: CombinedDelay, t: float, w: float) -> float:
    """1 - F^Z(t - w); equals 1 whenever t <= w."""
    if t <= w:
        return 1.0
    return z.sf(t - w)
