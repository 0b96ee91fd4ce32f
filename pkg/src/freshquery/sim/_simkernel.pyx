# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled event loop for the query-cycle Monte Carlo.

Semantics (including the pseudo-random stream) are identical to the pure
Python fallback in `_simkernel_py`; keep the two in lockstep.
"""

from libc.math cimport log
from libc.stdint cimport uint64_t, int64_t

import numpy as np


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _next_double(uint64_t *state) nogil:
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    return <double>(_mix(state[0]) >> 11) * (1.0 / 9007199254740992.0)


cdef inline int _pick(double u, double[:] cum, int n) nogil:
    cdef int k = 0
    while k < n - 1 and u >= cum[k]:
        k += 1
    return k


def run_cycles(
    uint64_t seed,
    int64_t cycles,
    int64_t burn_in,
    int64_t n_batches,
    double[:] exit_rates,
    double[:, :] jump_cum,
    double[:] init_cum,
    int y_kind, double[:] y_vals, double[:] y_cum, double y_rate,
    int d_kind, double[:] d_vals, double[:] d_cum, double d_rate,
    int policy_mode,
    double[:, :] policy_table,
    double[:] policy_vec,
    double gamma, double w_max,
    double[:, :] seg_ends,
    int64_t[:, :] seg_states,
    int64_t[:] n_segs,
):
    cdef int s = exit_rates.shape[0]
    cdef int n_y = y_vals.shape[0]
    cdef int n_d = d_vals.shape[0]
    cdef int64_t n_measured = cycles - burn_in
    cdef int64_t batch_size = n_measured // n_batches
    cdef int64_t used = batch_size * n_batches
    cdef int64_t total = burn_in + used

    batch_fresh_arr = np.zeros(n_batches)
    batch_time_arr = np.zeros(n_batches)
    phi_arr = np.zeros(s, dtype=np.int64)
    trans_arr = np.zeros((s, s), dtype=np.int64)
    cdef double[:] batch_fresh = batch_fresh_arr
    cdef double[:] batch_time = batch_time_arr
    cdef int64_t[:] phi_counts = phi_arr
    cdef int64_t[:, :] trans_counts = trans_arr

    cdef uint64_t rng = seed
    cdef double u, y, d_new, w, tq, horizon, d_prev
    cdef double t, t_next, dt, fresh, a, pos, e, e_full, cyc_len, sum_cycle = 0.0
    cdef int state, cur, x_at_tq, d_idx, d_prev_idx, k_seg
    cdef int64_t k, b

    u = _next_double(&rng)
    state = _pick(u, init_cum, s)
    d_prev = 0.0
    d_prev_idx = 0

    for k in range(total):
        if policy_mode == 0:
            w = policy_table[state, d_prev_idx]
        elif policy_mode == 1:
            w = gamma - d_prev
            if w < 0.0:
                w = 0.0
            if w > w_max:
                w = w_max
        else:
            w = policy_vec[state]

        if y_kind == 0:
            u = _next_double(&rng)
            y = y_vals[_pick(u, y_cum, n_y)]
        else:
            u = _next_double(&rng)
            y = -log(1.0 - u) / y_rate
        if d_kind == 0:
            u = _next_double(&rng)
            d_idx = _pick(u, d_cum, n_d)
            d_new = d_vals[d_idx]
        else:
            u = _next_double(&rng)
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
        while True:
            u = _next_double(&rng)
            dt = -log(1.0 - u) / exit_rates[cur]
            t_next = t + dt
            if t_next >= horizon:
                a = t if t > d_prev else d_prev
                if a < horizon:
                    while seg_ends[state, k_seg] <= a:
                        k_seg += 1
                    pos = a
                    while pos < horizon:
                        e_full = seg_ends[state, k_seg]
                        e = e_full if e_full < horizon else horizon
                        if seg_states[state, k_seg] == cur:
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
                while seg_ends[state, k_seg] <= a:
                    k_seg += 1
                pos = a
                while pos < t_next:
                    e_full = seg_ends[state, k_seg]
                    e = e_full if e_full < t_next else t_next
                    if seg_states[state, k_seg] == cur:
                        fresh += e - pos
                    pos = e
                    if e_full <= t_next:
                        k_seg += 1
                    else:
                        break
            if t <= tq and tq < t_next:
                x_at_tq = cur
            u = _next_double(&rng)
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
        "batch_fresh": batch_fresh_arr,
        "batch_time": batch_time_arr,
        "phi_counts": phi_arr,
        "trans_counts": trans_arr,
        "sum_cycle": sum_cycle,
        "n_used": used,
    }
