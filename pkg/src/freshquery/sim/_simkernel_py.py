"""Pure-Python fallback for the simulation kernel.

Bit-compatible with the Cython extension `_simkernel`: same pseudo-random
stream (splitmix64), same draw order, same floating-point operations. Slow,
but usable when the compiled module is unavailable.
"""

from math import log

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0


def _next_double(state):
    s = (state[0] + _GOLDEN) & _MASK
    state[0] = s
    z = s
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    z ^= z >> 31
    return float(z >> 11) * _INV53


def _pick(u, cum, n):
    k = 0
    while k < n - 1 and u >= cum[k]:
        k += 1
    return k


def run_cycles(
    seed,
    cycles,
    burn_in,
    n_batches,
    exit_rates,
    jump_cum,
    init_cum,
    y_kind, y_vals, y_cum, y_rate,
    d_kind, d_vals, d_cum, d_rate,
    policy_mode,
    policy_table,
    policy_vec,
    gamma, w_max,
    seg_ends,
    seg_states,
    n_segs,
):
    exit_rates = np.asarray(exit_rates)
    jump_cum = np.asarray(jump_cum)
    s = exit_rates.shape[0]
    n_y = len(y_vals)
    n_d = len(d_vals)
    n_measured = cycles - burn_in
    batch_size = n_measured // n_batches
    used = batch_size * n_batches
    total = burn_in + used

    batch_fresh = np.zeros(n_batches)
    batch_time = np.zeros(n_batches)
    phi_counts = np.zeros(s, dtype=np.int64)
    trans_counts = np.zeros((s, s), dtype=np.int64)
    sum_cycle = 0.0

    rng = [int(seed) & _MASK]

    u = _next_double(rng)
    state = _pick(u, init_cum, s)
    d_prev = 0.0
    d_prev_idx = 0

    for k in range(total):
        if policy_mode == 0:
            w = policy_table[state][d_prev_idx]
        elif policy_mode == 1:
            w = gamma - d_prev
            if w < 0.0:
                w = 0.0
            if w > w_max:
                w = w_max
        else:
            w = policy_vec[state]

        u = _next_double(rng)
        if y_kind == 0:
            y = y_vals[_pick(u, y_cum, n_y)]
        else:
            y = -log(1.0 - u) / y_rate
        u = _next_double(rng)
        if d_kind == 0:
            d_idx = _pick(u, d_cum, n_d)
            d_new = d_vals[d_idx]
        else:
            d_idx = 0
            d_new = -log(1.0 - u) / d_rate

        tq = d_prev + w + y
        horizon = tq + d_new
        cyc_len = w + y + d_new

        t = 0.0
        cur = state
        x_at_tq = -1
        fresh = 0.0
        k_seg = 0
        ends = seg_ends[state]
        ests = seg_states[state]
        while True:
            u = _next_double(rng)
            dt = -log(1.0 - u) / exit_rates[cur]
            t_next = t + dt
            if t_next >= horizon:
                a = t if t > d_prev else d_prev
                if a < horizon:
                    while ends[k_seg] <= a:
                        k_seg += 1
                    pos = a
                    while pos < horizon:
                        e_full = ends[k_seg]
                        e = e_full if e_full < horizon else horizon
                        if ests[k_seg] == cur:
                            fresh += e - pos
                        pos = e
                        if e_full <= horizon:
                            k_seg += 1
                        else:
                            break
                if tq >= t:
                    x_at_tq = cur
                break
            a = t if t > d_prev else d_prev
            if a < t_next:
                while ends[k_seg] <= a:
                    k_seg += 1
                pos = a
                while pos < t_next:
                    e_full = ends[k_seg]
                    e = e_full if e_full < t_next else t_next
                    if ests[k_seg] == cur:
                        fresh += e - pos
                    pos = e
                    if e_full <= t_next:
                        k_seg += 1
                    else:
                        break
            if t <= tq < t_next:
                x_at_tq = cur
            u = _next_double(rng)
            cur = _pick(u, jump_cum[cur], s)
            t = t_next

        if k >= burn_in:
            b = (k - burn_in) // batch_size
            batch_fresh[b] += fresh
            batch_time[b] += cyc_len
            phi_counts[state] += 1
            trans_counts[state, x_at_tq] += 1
            sum_cycle += cyc_len

        state = x_at_tq
        d_prev = d_new
        d_prev_idx = d_idx

    return {
        "batch_fresh": batch_fresh,
        "batch_time": batch_time,
        "phi_counts": phi_counts,
        "trans_counts": trans_counts,
        "sum_cycle": sum_cycle,
        "n_used": used,
    }
