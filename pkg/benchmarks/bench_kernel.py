#!/usr/bin/env python3
"""Benchmark the compiled simulation kernel against the pure-Python fallback.

Both kernels share the same splitmix64 generator and draw order, so beyond the
speed comparison this script also verifies that they produce bit-identical
results on a common short run.

Usage: python3 benchmarks/bench_kernel.py [--cycles N]
"""

import argparse
import time

import numpy as np

import freshquery.simulator as simulator
from freshquery.delays import Deterministic, DiscreteAtoms
from freshquery.freshness import DelayIndependent
from freshquery.sim import BACKEND, _simkernel_py
from freshquery.simulator import SimConfig, simulate


def build_case():
    from freshquery.ctmc import validate_generator

    g = validate_generator([[-1.0, 1.0], [0.1, -0.1]])
    y = Deterministic(0.0)
    d = DiscreteAtoms([0.0, 2.0], [0.5, 0.5])
    policy = DelayIndependent([0.4, 1.2], 1.5)
    return g, y, d, policy


def run(kernel_name: str, kernel, cycles: int, seed: int):
    g, y, d, policy = build_case()
    original = simulator.run_cycles
    simulator.run_cycles = kernel
    try:
        t0 = time.perf_counter()
        res = simulate(g, "martingale", y, d, policy, SimConfig(cycles=cycles, seed=seed))
        dt = time.perf_counter() - t0
    finally:
        simulator.run_cycles = original
    print(f"{kernel_name:>8}: {cycles:>9,d} cycles in {dt:8.3f}s  "
          f"({cycles / dt / 1e6:6.2f} M cycles/s)  mbf_hat={res.mbf_hat:.9f}")
    return res, dt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cycles", type=int, default=1_000_000)
    args = ap.parse_args()

    if BACKEND != "cython":
        print("compiled kernel not available; benchmarking the fallback only")
        run("python", _simkernel_py.run_cycles, args.cycles // 20, seed=1)
        return

    from freshquery.sim import _simkernel

    fast, t_fast = run("cython", _simkernel.run_cycles, args.cycles, seed=1)
    # The pure-Python kernel is orders of magnitude slower; scale it down.
    py_cycles = max(10_000, args.cycles // 50)
    slow, t_slow = run("python", _simkernel_py.run_cycles, py_cycles, seed=1)
    speedup = (args.cycles / t_fast) / (py_cycles / t_slow)
    print(f"speedup: {speedup:.0f}x (per-cycle throughput)")

    check_cfg = SimConfig(cycles=20_000, seed=7, burn_in=100)
    g, y, d, policy = build_case()
    a = simulate(g, "martingale", y, d, policy, check_cfg)
    simulator.run_cycles = _simkernel_py.run_cycles
    try:
        b = simulate(g, "martingale", y, d, policy, check_cfg)
    finally:
        simulator.run_cycles = _simkernel.run_cycles
    identical = (
        a.mbf_hat == b.mbf_hat
        and a.stderr == b.stderr
        and np.array_equal(a.phi_hat, b.phi_hat)
        and np.array_equal(a.p_tilde_hat, b.p_tilde_hat)
    )
    print(f"bit-identical outputs on a 20k-cycle run: {identical}")
    if not identical:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
