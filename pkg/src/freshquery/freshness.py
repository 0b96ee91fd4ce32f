"""Analytic mean-binary-freshness evaluation.

Builds the sampled-state chain of successive reply states, solves its
stationary vector phi, computes the per-state expected fresh time per query
cycle and assembles the renewal-reward ratio.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .ctmc import GeneratorMatrix, stationary_of_stochastic, transition_probabilities
from .delays import CombinedDelay, Delay, convolve
from .errors import DegenerateCycleError, QuadratureError
from .estimator import MatchProbability

QUAD_TOL = 1e-11
TAIL_EPS = 1e-13


# -- waiting policies --------------------------------------------------------


class WaitingPolicy:
    """Bounded waiting function W(i, d) in [0, w_max]."""

    kind = "base"

    def __init__(self, w_max: float):
        if w_max < 0.0:
            raise ValueError("w_max must be non-negative")
        self.w_max = w_max

    def wait(self, i: int, d: float) -> float:
        raise NotImplementedError

    @property
    def state_independent(self) -> bool:
        return False

    def delay_kinks(self) -> list[float]:
        """Points where d -> W(i, d) is kinked, for quadrature over continuous D."""
        return []

    def summary(self) -> str:
        raise NotImplementedError


class ZeroWait(WaitingPolicy):
    kind = "zw"

    def __init__(self, w_max: float = 0.0):
        super().__init__(w_max)

    def wait(self, i, d):
        return 0.0

    @property
    def state_independent(self):
        return True

    def summary(self):
        return "w=0"


class ConstantWait(WaitingPolicy):
    kind = "cw"

    def __init__(self, w: float, w_max: float):
        super().__init__(w_max)
        if not 0.0 <= w <= w_max:
            raise ValueError("constant wait outside [0, w_max]")
        self.w = w

    def wait(self, i, d):
        return self.w

    @property
    def state_independent(self):
        return True

    def summary(self):
        return f"w={self.w:.9g}"


class StateIndependentTable(WaitingPolicy):
    """Wait depends only on the perceived age d, given on the atom support of D."""

    kind = "state_ind"

    def __init__(self, d_values, waits, w_max: float):
        super().__init__(w_max)
        self.d_values = np.asarray(d_values, dtype=float)
        self.waits = np.asarray(waits, dtype=float)
        if self.d_values.shape != self.waits.shape:
            raise ValueError("d_values and waits must align")
        if np.any(self.waits < 0.0) or np.any(self.waits > w_max):
            raise ValueError("waits outside [0, w_max]")

    def _index(self, d):
        idx = int(np.argmin(np.abs(self.d_values - d)))
        if abs(self.d_values[idx] - d) > 1e-9:
            raise KeyError(f"delay {d} not on the policy's atom support")
        return idx

    def wait(self, i, d):
        return float(self.waits[self._index(d)])

    @property
    def state_independent(self):
        return True

    def summary(self):
        return ";".join(f"d={d:.9g}:w={w:.9g}" for d, w in zip(self.d_values, self.waits))


class ThresholdPolicy(WaitingPolicy):
    """State-independent threshold form W(d) = min(w_max, (gamma - d)^+)."""

    kind = "state_ind"

    def __init__(self, gamma: float, w_max: float):
        super().__init__(w_max)
        if gamma < 0.0:
            raise ValueError("gamma must be non-negative (math.inf allowed)")
        self.gamma = gamma

    def wait(self, i, d):
        if math.isinf(self.gamma):
            return self.w_max
        return min(self.w_max, max(0.0, self.gamma - d))

    @property
    def state_independent(self):
        return True

    def delay_kinks(self):
        if math.isinf(self.gamma):
            return []
        return [max(0.0, self.gamma - self.w_max), self.gamma]

    def summary(self):
        return f"gamma={self.gamma:.9g}"


class DelayIndependent(WaitingPolicy):
    """One wait per state, ignoring the perceived age."""

    kind = "delay_ind"

    def __init__(self, waits, w_max: float):
        super().__init__(w_max)
        self.waits = np.asarray(waits, dtype=float)
        if np.any(self.waits < 0.0) or np.any(self.waits > w_max):
            raise ValueError("waits outside [0, w_max]")

    def wait(self, i, d):
        return float(self.waits[i])

    def summary(self):
        return ";".join(f"s={i}:w={w:.9g}" for i, w in enumerate(self.waits))


class FullTable(WaitingPolicy):
    """W(i, d) tabulated over states x delay atoms."""

    kind = "full"

    def __init__(self, d_values, waits, w_max: float):
        super().__init__(w_max)
        self.d_values = np.asarray(d_values, dtype=float)
        self.waits = np.asarray(waits, dtype=float)
        if self.waits.ndim != 2 or self.waits.shape[1] != self.d_values.size:
            raise ValueError("waits must be (n_states, n_delay_atoms)")
        if np.any(self.waits < 0.0) or np.any(self.waits > w_max):
            raise ValueError("waits outside [0, w_max]")

    def _index(self, d):
        idx = int(np.argmin(np.abs(self.d_values - d)))
        if abs(self.d_values[idx] - d) > 1e-9:
            raise KeyError(f"delay {d} not on the policy's atom support")
        return idx

    def wait(self, i, d):
        return float(self.waits[i, self._index(d)])

    def summary(self):
        parts = []
        for i in range(self.waits.shape[0]):
            for j, d in enumerate(self.d_values):
                parts.append(f"s={i},d={d:.9g}:w={self.waits[i, j]:.9g}")
        return ";".join(parts)


class PerStateThreshold(WaitingPolicy):
    """Per-state threshold W(i, d) = min(w_max, (gamma_i - d)^+)."""

    kind = "full"

    def __init__(self, gammas, w_max: float):
        super().__init__(w_max)
        self.gammas = np.asarray(gammas, dtype=float)

    def wait(self, i, d):
        gam = self.gammas[i]
        if math.isinf(gam):
            return self.w_max
        return min(self.w_max, max(0.0, gam - d))

    def delay_kinks(self):
        out = []
        for gam in self.gammas:
            if not math.isinf(gam):
                out += [max(0.0, gam - self.w_max), gam]
        return out

    def summary(self):
        return ";".join(f"s={i}:gamma={g:.9g}" for i, g in enumerate(self.gammas))


# -- evaluation context ------------------------------------------------------


@dataclass
class EvalContext:
    """Shared caches for one (chain, estimator, delay) configuration."""

    g: GeneratorMatrix
    kind: str
    y: Delay
    d: Delay
    mp: MatchProbability = field(default=None)
    z: CombinedDelay = field(default=None)

    def __post_init__(self):
        if self.mp is None:
            self.mp = MatchProbability(self.g, self.kind)
        if self.z is None:
            self.z = convolve(self.y, self.d)
        self._probs_cache: dict[float, np.ndarray] = {}

    @property
    def pi(self):
        return self.mp.pi

    def probs_exact(self, t: float) -> np.ndarray:
        """Memoized exact P(t) by uniformization."""
        mat = self._probs_cache.get(t)
        if mat is None:
            mat = transition_probabilities(self.g, t).probs
            self._probs_cache[t] = mat
        return mat


# -- sampled chain -----------------------------------------------------------


@dataclass(frozen=True)
class SampledChain:
    p_tilde: np.ndarray
    phi: np.ndarray


def _row_after_delay(ctx: EvalContext, i: int, base: float) -> np.ndarray:
    """E_Y[ P_{i,:}(base + Y) ], exact sums for atoms, quadrature otherwise."""
    y = ctx.y
    if y.is_atomic:
        row = np.zeros(ctx.g.size)
        for yv, yp in zip(y.values, y.probs):
            row += yp * ctx.probs_exact(base + yv)[i]
        return row
    upper = y.truncation(TAIL_EPS)
    row = np.empty(ctx.g.size)
    for j in range(ctx.g.size):
        val, err = quad(
            lambda t: ctx.mp.probs(base + t)[i, j] * y.pdf(t),
            0.0,
            upper,
            epsabs=QUAD_TOL,
            epsrel=0.0,
            limit=200,
        )
        if err > 1e-8:
            raise QuadratureError(f"sampled-chain quadrature error {err:.2e}")
        row[j] = val + ctx.pi[j] * y.sf(upper)
    return row


def sampled_chain(ctx_or_g, y=None, d=None, policy: WaitingPolicy = None, kind: str = "martingale") -> SampledChain:
    """Embedded chain of successive sampled reply states and its stationary vector."""
    ctx = ctx_or_g if isinstance(ctx_or_g, EvalContext) else EvalContext(ctx_or_g, kind, y, d)
    s = ctx.g.size
    p_tilde = np.zeros((s, s))
    if ctx.d.is_atomic:
        for i in range(s):
            for dv, dp in zip(ctx.d.values, ctx.d.probs):
                p_tilde[i] += dp * _row_after_delay(ctx, i, dv + policy.wait(i, dv))
    else:
        upper = ctx.d.truncation(TAIL_EPS)
        kinks = sorted(k for k in policy.delay_kinks() if 0.0 < k < upper)
        for i in range(s):
            def integrand(dv, j=None, i=i):
                return ctx.mp.probs(dv + policy.wait(i, dv))[i] * ctx.d.pdf(dv)

            for j in range(s):
                val, _ = quad(
                    lambda dv: float(integrand(dv)[j]),
                    0.0,
                    upper,
                    points=kinks or None,
                    epsabs=QUAD_TOL,
                    epsrel=0.0,
                    limit=300,
                )
                p_tilde[i, j] = val + ctx.pi[j] * ctx.d.sf(upper)
    phi = stationary_of_stochastic(p_tilde)
    return SampledChain(p_tilde=p_tilde, phi=phi)


# -- fresh-time integrals ----------------------------------------------------


def fresh_time_integral(ctx: EvalContext, i: int, d: float, w: float) -> float:
    """G_i(d, w) = integral over t of m_i(t + d) * (1 - F^Z(t - w)).

    Atomic Z reduces to antiderivative differences; continuous Z uses
    adaptive quadrature split at the survival kinks, with an analytic tail.
    """
    mp, z = ctx.mp, ctx.z
    if z.is_atomic:
        return float(
            sum(q * mp.integral_m(i, d, d + w + zv) for zv, q in zip(z.values, z.probs))
        )
    upper = w + z.truncation(TAIL_EPS)
    pts = sorted({w + s for s in z.shifts() if 0.0 < w + s < upper})
    val, err = quad(
        lambda t: mp.m(i, t + d) * z.sf(t - w),
        0.0,
        upper,
        points=pts or None,
        epsabs=QUAD_TOL,
        epsrel=0.0,
        limit=400,
    )
    if err > 1e-8:
        raise QuadratureError(f"fresh-time quadrature error {err:.2e}")
    return val + mp.m_inf[i] * z.integrated_sf(upper - w)


def expected_g(ctx_or_g, kind=None, i: int = 0, y=None, d=None, policy: WaitingPolicy = None) -> float:
    """Expected fresh time per cycle given the last reply was state i."""
    ctx = ctx_or_g if isinstance(ctx_or_g, EvalContext) else EvalContext(ctx_or_g, kind, y, d)
    dd = ctx.d
    if dd.is_atomic:
        return float(
            sum(dp * fresh_time_integral(ctx, i, dv, policy.wait(i, dv)) for dv, dp in zip(dd.values, dd.probs))
        )
    upper = dd.truncation(TAIL_EPS)
    kinks = sorted(k for k in policy.delay_kinks() if 0.0 < k < upper)
    val, _ = quad(
        lambda dv: fresh_time_integral(ctx, i, dv, policy.wait(i, dv)) * dd.pdf(dv),
        0.0,
        upper,
        points=kinks or None,
        epsabs=1e-10,
        epsrel=0.0,
        limit=300,
    )
    tail = dd.sf(upper) * fresh_time_integral(ctx, i, upper, policy.wait(i, upper))
    return val + tail


def expected_wait(ctx: EvalContext, i: int, policy: WaitingPolicy) -> float:
    """E[W(i, D)] over the backward-delay distribution."""
    dd = ctx.d
    if dd.is_atomic:
        return float(sum(dp * policy.wait(i, dv) for dv, dp in zip(dd.values, dd.probs)))
    upper = dd.truncation(TAIL_EPS)
    kinks = sorted(k for k in policy.delay_kinks() if 0.0 < k < upper)
    val, _ = quad(
        lambda dv: policy.wait(i, dv) * dd.pdf(dv),
        0.0,
        upper,
        points=kinks or None,
        epsabs=1e-12,
        epsrel=0.0,
        limit=200,
    )
    return val + policy.wait(i, upper) * dd.sf(upper)


# -- assembly ----------------------------------------------------------------


@dataclass(frozen=True)
class FreshnessReport:
    mbf: float
    numerator: float
    denominator: float
    phi: np.ndarray
    per_state_g: np.ndarray

    def to_row(self) -> dict:
        return {
            "mbf": self.mbf,
            "numerator": self.numerator,
            "denominator": self.denominator,
            "phi": list(self.phi),
            "g": list(self.per_state_g),
        }


def mbf_analytic(ctx_or_g, kind=None, y=None, d=None, policy: WaitingPolicy = None) -> FreshnessReport:
    """Stationary MBF of a waiting policy: sum phi_i E[g_i] / (E[Z] + sum phi_i E[W_i])."""
    ctx = ctx_or_g if isinstance(ctx_or_g, EvalContext) else EvalContext(ctx_or_g, kind, y, d)
    s = ctx.g.size
    w_vec = np.array([expected_wait(ctx, i, policy) for i in range(s)])
    if ctx.z.mean() + float(np.max(w_vec)) <= 1e-15:
        raise DegenerateCycleError("mean cycle length is zero")
    chain = sampled_chain(ctx, policy=policy)
    g_vec = np.array([expected_g(ctx, i=i, policy=policy) for i in range(s)])
    numerator = float(chain.phi @ g_vec)
    denominator = ctx.z.mean() + float(chain.phi @ w_vec)
    if denominator <= 1e-15:
        raise DegenerateCycleError("mean cycle length is zero")
    return FreshnessReport(
        mbf=numerator / denominator,
        numerator=numerator,
        denominator=denominator,
        phi=chain.phi,
        per_state_g=g_vec,
    )


def zero_wait_mbf(ctx_or_g, kind=None, y=None, d=None) -> FreshnessReport:
    """Freshness of the query-immediately baseline: mbf_analytic with W identically zero."""
    ctx = ctx_or_g if isinstance(ctx_or_g, EvalContext) else EvalContext(ctx_or_g, kind, y, d)
    return mbf_analytic(ctx, policy=ZeroWait())
