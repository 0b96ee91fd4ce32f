"""Synthesis of the five waiting-policy families.

state_ind : Dinkelbach bisection on the linearized objective, per-age argmax
            (threshold closed form when the match probability is monotone and
            the combined delay has a density).
delay_ind : SMDP over reply states with a wait-time action grid plus local
            golden-section polish.
greedy    : per-state Dinkelbach on the fractional lower bound.
opt_wait  : SMDP over (reply state, perceived age) pairs.
cw / zw   : constant-wait benchmark and the zero-wait baseline.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from .delays import CombinedDelay, DiscreteAtoms
from .errors import DensityUnavailableError, QuadratureError, UnsupportedPairError
from .freshness import (
    ConstantWait,
    DelayIndependent,
    EvalContext,
    FreshnessReport,
    FullTable,
    PerStateThreshold,
    StateIndependentTable,
    ThresholdPolicy,
    WaitingPolicy,
    ZeroWait,
    expected_wait,
    fresh_time_integral,
    mbf_analytic,
    zero_wait_mbf,
)
from .smdp import SmdpModel, evaluate_policy, policy_iteration

THETA_BRACKET_TOL = 1e-8
GAMMA_TOL = 1e-10
GRID_POINTS = 151
POLISH_XTOL = 1e-7
TAIL_EPS = 1e-14


@dataclass
class PolicyResult:
    """A synthesized policy with its analytic freshness and diagnostics."""

    policy: WaitingPolicy
    report: FreshnessReport
    theta: float | None = None
    j_star: float | None = None
    lower_bound: float | None = None
    gain: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def mbf(self) -> float:
        return self.report.mbf


@dataclass
class PFun:
    """Scalar match-probability view: value, antiderivative and limit."""

    value: callable
    integral: callable  # integral(a, b)
    inf: float

    @classmethod
    def aggregate(cls, ctx: EvalContext) -> "PFun":
        mp = ctx.mp
        return cls(value=lambda t: float(mp.p(t)), integral=mp.integral_p, inf=mp.p_inf)

    @classmethod
    def per_state(cls, ctx: EvalContext, i: int) -> "PFun":
        mp = ctx.mp
        return cls(
            value=lambda t: float(mp.m(i, t)),
            integral=lambda a, b: mp.integral_m(i, a, b),
            inf=float(mp.m_inf[i]),
        )


# -- the linearized objective -------------------------------------------------


def eq_objective(pf: PFun, z: CombinedDelay, d: float, w: float, theta: float) -> float:
    """L_d(w) = integral of (p(t + d) - theta) * (1 - F^Z(t - w)) over t >= 0."""
    if z.is_atomic:
        acc = 0.0
        for zv, q in zip(z.values, z.probs):
            acc += q * (pf.integral(d, d + w + zv) - theta * (w + zv))
        return acc
    upper = w + z.truncation(TAIL_EPS)
    pts = sorted({w + s for s in z.shifts() if 0.0 < w + s < upper})
    val, _ = quad(
        lambda t: (pf.value(t + d) - theta) * z.sf(t - w),
        0.0,
        upper,
        points=pts or None,
        epsabs=1e-11,
        epsrel=0.0,
        limit=400,
    )
    return val + (pf.inf - theta) * z.integrated_sf(upper - w)


def linearized_value_state_ind(ctx: EvalContext, theta: float, wait_table) -> float:
    """J(theta) of a candidate state-independent wait table over D's atoms."""
    if not ctx.d.is_atomic:
        raise UnsupportedPairError("wait tables require an atomic perceived-age distribution")
    pf = PFun.aggregate(ctx)
    waits = np.asarray(wait_table, dtype=float)
    return float(
        sum(dp * eq_objective(pf, ctx.z, dv, w, theta) for dv, dp, w in zip(ctx.d.values, ctx.d.probs, waits))
    )


# -- inner argmax --------------------------------------------------------------


def _grid_polish_max(f, lo: float, hi: float, n: int = GRID_POINTS):
    """Coarse grid argmax followed by bounded local polish; ties -> smallest x."""
    xs = np.linspace(lo, hi, n)
    vals = np.array([f(x) for x in xs])
    best = int(np.argmax(vals >= vals.max() - 1e-12))
    a = xs[max(best - 1, 0)]
    b = xs[min(best + 1, n - 1)]
    if b - a < 1e-12:
        return float(xs[best]), float(vals[best])
    res = minimize_scalar(lambda x: -f(x), bounds=(a, b), method="bounded", options={"xatol": POLISH_XTOL})
    x_star, v_star = float(res.x), float(-res.fun)
    if v_star < vals[best]:
        return float(xs[best]), float(vals[best])
    return x_star, v_star


def expected_p_at_offset(pf: PFun, z: CombinedDelay, gamma: float) -> float:
    """l(gamma): expectation of p(Z + gamma) under the combined-delay density."""
    if not z.is_absolutely_continuous:
        raise DensityUnavailableError("combined delay has atoms; no density available")
    upper = z.truncation(TAIL_EPS)
    pts = sorted({s for s in z.shifts() if 0.0 < s < upper})
    val, _ = quad(
        lambda t: pf.value(t + gamma) * z.pdf(t),
        0.0,
        upper,
        points=pts or None,
        epsabs=1e-12,
        epsrel=0.0,
        limit=400,
    )
    return val + pf.inf * z.sf(upper)


def threshold_gamma(pf: PFun, z: CombinedDelay, theta: float, w_max: float, d_max: float) -> float:
    """Threshold such that W(d) = min(w_max, (gamma - d)^+) maximizes L.

    gamma = sup{gamma > 0 : l(gamma) >= theta}; 0 when l(0) <= theta and
    math.inf when l(d_max + w_max) >= theta.
    """
    if expected_p_at_offset(pf, z, 0.0) <= theta:
        return 0.0
    hi = d_max + w_max
    if expected_p_at_offset(pf, z, hi) >= theta:
        return math.inf
    lo = 0.0
    while hi - lo > GAMMA_TOL:
        mid = 0.5 * (lo + hi)
        if expected_p_at_offset(pf, z, mid) >= theta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimal_wait_for_theta(
    pf: PFun,
    z: CombinedDelay,
    d: float,
    theta: float,
    w_max: float,
    p_monotone: bool,
    d_max: float = 0.0,
) -> float:
    """argmax_w of the linearized objective at perceived age d.

    Dispatch: threshold closed form when p is monotone and Z has a density,
    endpoint cases when p is monotone and Z is atomic, otherwise grid+polish.
    """
    if p_monotone and z.is_absolutely_continuous:
        gamma = threshold_gamma(pf, z, theta, w_max, max(d_max, d))
        if math.isinf(gamma):
            return w_max
        return min(w_max, max(0.0, gamma - d))
    if p_monotone:
        if pf.inf >= theta:
            return w_max
        if pf.value(d) <= theta:
            return 0.0
    w, _ = _grid_polish_max(lambda w_: eq_objective(pf, z, d, w_, theta), 0.0, w_max)
    return w


# -- Dinkelbach loops ----------------------------------------------------------


def _dinkelbach(solve_for_theta, tol: float = THETA_BRACKET_TOL):
    """Bisection on theta in [0, 1] using the sign of J*(theta).

    `solve_for_theta(theta)` returns (policy_data, j_star). Returns
    (theta_final, policy_data, j_star, trace).
    """
    lo, hi = 0.0, 1.0
    trace = []
    data, j = solve_for_theta(lo)
    trace.append((lo, j))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        data, j = solve_for_theta(mid)
        trace.append((mid, j))
        if j >= 0.0:
            lo = mid
        else:
            hi = mid
    theta = 0.5 * (lo + hi)
    data, j = solve_for_theta(theta)
    return theta, data, j, trace


def _state_ind_solver(ctx: EvalContext, pf: PFun, w_max: float, p_monotone: bool):
    """Per-theta inner solver for a single PFun; shared by state_ind and greedy."""
    z = ctx.z
    use_threshold = p_monotone and z.is_absolutely_continuous
    if ctx.d.is_atomic:
        d_vals, d_probs = ctx.d.values, ctx.d.probs
        d_max = float(d_vals[-1])

        def solve(theta):
            waits = np.array(
                [optimal_wait_for_theta(pf, z, dv, theta, w_max, p_monotone, d_max) for dv in d_vals]
            )
            j = float(sum(dp * eq_objective(pf, z, dv, w, theta) for dv, dp, w in zip(d_vals, d_probs, waits)))
            return waits, j

        return solve, "table"
    if not use_threshold:
        raise UnsupportedPairError(
            "continuous perceived-age distributions need the threshold structure "
            "(monotone p and absolutely continuous Z); discretize D instead"
        )
    d_max = ctx.d.truncation(1e-10)

    def solve(theta):
        gamma = threshold_gamma(pf, z, theta, w_max, d_max)
        pol = ThresholdPolicy(gamma if not math.isinf(gamma) else math.inf, w_max)
        upper = ctx.d.truncation(TAIL_EPS)
        kinks = sorted(k for k in pol.delay_kinks() if 0.0 < k < upper)
        val, _ = quad(
            lambda dv: eq_objective(pf, z, dv, pol.wait(0, dv), theta) * ctx.d.pdf(dv),
            0.0,
            upper,
            points=kinks or None,
            epsabs=1e-11,
            epsrel=0.0,
            limit=300,
        )
        j = val + ctx.d.sf(upper) * eq_objective(pf, z, upper, pol.wait(0, upper), theta)
        return gamma, j

    return solve, "threshold"


def state_independent_policy(g_or_ctx, kind=None, y=None, d=None, w_max: float = 1.5) -> PolicyResult:
    """Optimal wait table depending only on the perceived age (Dinkelbach)."""
    ctx = _as_ctx(g_or_ctx, kind, y, d)
    pf = PFun.aggregate(ctx)
    p_monotone = ctx.mp.is_monotone_decreasing()
    solve, form = _state_ind_solver(ctx, pf, w_max, p_monotone)
    theta, data, j_star, trace = _dinkelbach(solve)
    if form == "table":
        policy = StateIndependentTable(ctx.d.values, data, w_max)
    else:
        policy = ThresholdPolicy(data, w_max)
    report = mbf_analytic(ctx, policy=policy)
    return PolicyResult(policy=policy, report=report, theta=theta, j_star=j_star, extras={"trace": trace})


def greedy_policy(g_or_ctx, kind=None, y=None, d=None, w_max: float = 1.5) -> PolicyResult:
    """Per-state Dinkelbach on the min-ratio lower bound."""
    ctx = _as_ctx(g_or_ctx, kind, y, d)
    s = ctx.g.size
    thetas = np.empty(s)
    rows = []
    form = None
    for i in range(s):
        pf = PFun.per_state(ctx, i)
        mono = ctx.mp.is_monotone_decreasing(state=i)
        solve, form = _state_ind_solver(ctx, pf, w_max, mono)
        theta_i, data, _, _ = _dinkelbach(solve)
        thetas[i] = theta_i
        rows.append(data)
    if form == "table":
        policy = FullTable(ctx.d.values, np.vstack(rows), w_max)
    else:
        policy = PerStateThreshold(np.asarray(rows, dtype=float), w_max)
    report = mbf_analytic(ctx, policy=policy)
    return PolicyResult(
        policy=policy, report=report, lower_bound=float(np.min(thetas)), extras={"thetas": thetas}
    )


# -- SMDP-based optimizers -------------------------------------------------------


def _require_atomic_d(ctx: EvalContext, n_atoms: int = 32) -> DiscreteAtoms:
    """Atomic view of D, discretizing continuous distributions by quantiles."""
    if ctx.d.is_atomic:
        return ctx.d
    qs = (np.arange(n_atoms) + 0.5) / n_atoms
    vals = np.array([_quantile(ctx.d, q) for q in qs])
    probs = np.full(n_atoms, 1.0 / n_atoms)
    mean_disc = float(vals @ probs)
    target = ctx.d.mean()
    if mean_disc > 0.0:
        vals = vals * (target / mean_disc)  # moment matching: preserve E[D] exactly
    disc = DiscreteAtoms(values=vals, probs=probs)
    if abs(disc.mean() - target) > 1e-6:
        warnings.warn("delay discretization changed E[D] by more than 1e-6 (GridTooCoarse)")
    return disc


def _quantile(dist, q: float) -> float:
    lo, hi = 0.0, dist.truncation(1e-12)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dist.cdf(mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _p_tilde_row(ctx: EvalContext, d_atoms: DiscreteAtoms, i: int, wait_of_d) -> np.ndarray:
    """Row i of the sampled chain for wait table d -> wait_of_d(d)."""
    from .freshness import _row_after_delay

    row = np.zeros(ctx.g.size)
    for dv, dp in zip(d_atoms.values, d_atoms.probs):
        row += dp * _row_after_delay(ctx, i, dv + wait_of_d(dv))
    return row


def delay_independent_policy(
    g_or_ctx, kind=None, y=None, d=None, w_max: float = 1.5, n_grid: int = GRID_POINTS
) -> PolicyResult:
    """Per-state constant waits via an SMDP on the reply states."""
    ctx = _as_ctx(g_or_ctx, kind, y, d)
    s = ctx.g.size
    d_atoms = _require_atomic_d(ctx)
    ez = ctx.z.mean()
    grid = np.linspace(0.0, w_max, n_grid)

    def reward_fn(i, a):
        return float(
            sum(dp * fresh_time_integral(ctx, i, dv, a) for dv, dp in zip(d_atoms.values, d_atoms.probs))
        )

    def trans_fn(i, a):
        from .freshness import _row_after_delay

        row = np.zeros(s)
        for dv, dp in zip(d_atoms.values, d_atoms.probs):
            row += dp * _row_after_delay(ctx, i, dv + a)
        return row

    model = SmdpModel(
        actions=[grid for _ in range(s)],
        transition=[np.array([trans_fn(i, a) for a in grid]) for i in range(s)],
        reward=[np.array([reward_fn(i, a) for a in grid]) for i in range(s)],
        sojourn=[grid + ez for _ in range(s)],
    )
    sol = policy_iteration(model)
    waits = _polish_smdp(
        sol.waits,
        reward_fn=reward_fn,
        trans_fn=trans_fn,
        sojourn_fn=lambda i, a: a + ez,
        w_max=w_max,
        step=grid[1] - grid[0],
    )
    p_pi = np.array([trans_fn(i, waits[i]) for i in range(s)])
    r_pi = np.array([reward_fn(i, waits[i]) for i in range(s)])
    h_pi = waits + ez
    gain, _ = evaluate_policy(p_pi, r_pi, h_pi)
    policy = DelayIndependent(waits, w_max)
    report = mbf_analytic(ctx, policy=policy)
    return PolicyResult(policy=policy, report=report, gain=gain, extras={"gain_trace": sol.gain_trace})


def optimal_policy(
    g_or_ctx,
    kind=None,
    y=None,
    d=None,
    w_max: float = 1.5,
    n_grid: int = GRID_POINTS,
    delay_grid: int = 32,
) -> PolicyResult:
    """Full W(i, d) via the two-dimensional SMDP on (state, perceived age)."""
    ctx = _as_ctx(g_or_ctx, kind, y, d)
    s = ctx.g.size
    d_atoms = _require_atomic_d(ctx, delay_grid)
    nd = d_atoms.values.size
    ez = ctx.z.mean()
    grid = np.linspace(0.0, w_max, n_grid)
    from .freshness import _row_after_delay

    def reward_fn(si, a):
        i, di = divmod(si, nd)
        return fresh_time_integral(ctx, i, float(d_atoms.values[di]), a)

    def trans_fn(si, a):
        i, di = divmod(si, nd)
        row_states = _row_after_delay(ctx, i, float(d_atoms.values[di]) + a)
        return np.outer(row_states, d_atoms.probs).ravel()

    n_pairs = s * nd
    model = SmdpModel(
        actions=[grid for _ in range(n_pairs)],
        transition=[np.array([trans_fn(si, a) for a in grid]) for si in range(n_pairs)],
        reward=[np.array([reward_fn(si, a) for a in grid]) for si in range(n_pairs)],
        sojourn=[grid + ez for _ in range(n_pairs)],
    )
    sol = policy_iteration(model)
    waits_flat = _polish_smdp(
        sol.waits,
        reward_fn=reward_fn,
        trans_fn=trans_fn,
        sojourn_fn=lambda si, a: a + ez,
        w_max=w_max,
        step=grid[1] - grid[0],
    )
    p_pi = np.array([trans_fn(si, waits_flat[si]) for si in range(n_pairs)])
    r_pi = np.array([reward_fn(si, waits_flat[si]) for si in range(n_pairs)])
    h_pi = waits_flat + ez
    gain, _ = evaluate_policy(p_pi, r_pi, h_pi)
    policy = FullTable(d_atoms.values, waits_flat.reshape(s, nd), w_max)
    if ctx.d.is_atomic:
        report = mbf_analytic(ctx, policy=policy)
    else:
        disc_ctx = EvalContext(ctx.g, ctx.kind, ctx.y, d_atoms, mp=ctx.mp)
        report = mbf_analytic(disc_ctx, policy=policy)
    return PolicyResult(policy=policy, report=report, gain=gain, extras={"gain_trace": sol.gain_trace})


def _polish_smdp(waits, reward_fn, trans_fn, sojourn_fn, w_max, step, rounds: int = 3):
    """Local golden-section refinement of each state's wait around the grid optimum."""
    waits = np.array(waits, dtype=float)
    n = waits.size
    for _ in range(rounds):
        p_pi = np.array([trans_fn(si, waits[si]) for si in range(n)])
        r_pi = np.array([reward_fn(si, waits[si]) for si in range(n)])
        h_pi = np.array([sojourn_fn(si, waits[si]) for si in range(n)])
        gain, bias = evaluate_policy(p_pi, r_pi, h_pi)
        moved = 0.0
        for si in range(n):
            lo = max(0.0, waits[si] - step)
            hi = min(w_max, waits[si] + step)

            def q(a, si=si):
                return reward_fn(si, a) - gain * sojourn_fn(si, a) + float(trans_fn(si, a) @ bias)

            res = minimize_scalar(lambda a: -q(a), bounds=(lo, hi), method="bounded", options={"xatol": POLISH_XTOL})
            cand = float(res.x)
            if -res.fun > q(waits[si]) + 1e-14:
                moved = max(moved, abs(cand - waits[si]))
                waits[si] = cand
        if moved < 1e-10:
            break
    return waits


# -- benchmarks -------------------------------------------------------------------


def constant_wait_policy(g_or_ctx, kind=None, y=None, d=None, w_max: float = 1.5) -> PolicyResult:
    """Best single wait applied regardless of state and age (grid + polish)."""
    ctx = _as_ctx(g_or_ctx, kind, y, d)
    pi = ctx.pi
    s = ctx.g.size
    d_atoms = _require_atomic_d(ctx)
    ez = ctx.z.mean()

    def mbf_of(w):
        num = sum(
            pi[i] * dp * fresh_time_integral(ctx, i, dv, w)
            for i in range(s)
            for dv, dp in zip(d_atoms.values, d_atoms.probs)
        )
        return num / (ez + w)

    w_star, _ = _grid_polish_max(mbf_of, 0.0, w_max)
    policy = ConstantWait(w_star, w_max)
    report = mbf_analytic(ctx, policy=policy)
    return PolicyResult(policy=policy, report=report)


def zero_wait_policy(g_or_ctx, kind=None, y=None, d=None, w_max: float = 1.5) -> PolicyResult:
    ctx = _as_ctx(g_or_ctx, kind, y, d)
    report = zero_wait_mbf(ctx)
    return PolicyResult(policy=ZeroWait(w_max), report=report)


def _as_ctx(g_or_ctx, kind, y, d) -> EvalContext:
    if isinstance(g_or_ctx, EvalContext):
        return g_or_ctx
    return EvalContext(g_or_ctx, kind, y, d)


SYNTHESIZERS = {
    "zw": zero_wait_policy,
    "cw": constant_wait_policy,
    "state_ind": state_independent_policy,
    "delay_ind": delay_independent_policy,
    "greedy": greedy_policy,
    "opt_wait": optimal_policy,
}
