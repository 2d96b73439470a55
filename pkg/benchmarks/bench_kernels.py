#!/usr/bin/env python3
"""Timing comparison of the two hot kernels against their numpy fallbacks.

Runs the bit-parallel logic kernel and the batched dual-edge STA kernel on
a mid-size multiplier, once through the compiled path and once through the
pure-numpy path, and prints median wall times.  The compiled path needs
numba; when it is unavailable (or VAXCIRC_NO_NUMBA is set) only the numpy
numbers are reported.

Usage: python3 benchmarks/bench_kernels.py [--vectors N] [--libs K] [--reps R]
"""

import argparse
import statistics
import time

import numpy as np

from vaxcirc import _kernels
from vaxcirc._compile import compile_logic, compile_timing
from vaxcirc.celllib import default_library, sample_matrix
from vaxcirc.errsim import pack_bits
from vaxcirc.harness import array_multiplier

FULL = np.uint64(0xFFFFFFFFFFFFFFFF)


def _logic_workload(n, n_vectors, seed=0):
    p = compile_logic(n)
    rng = np.random.default_rng(seed)
    n_words = (n_vectors + 63) // 64
    words = np.zeros((p.n_signals, n_words), dtype=np.uint64)
    words[1, :] = FULL
    for j, row in enumerate(p.pi_index):
        words[row] = pack_bits(rng.integers(0, 2, n_vectors, dtype=np.uint8))
    return p, words


def _sta_workload(n, n_libs, seed=0):
    vlib = default_library()
    p = compile_timing(n, vlib.arc_index())
    delays = sample_matrix(vlib, range(seed, seed + n_libs))
    return p, delays


def _time(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--vectors", type=int, default=1_000_000)
    ap.add_argument("--libs", type=int, default=20_000)
    ap.add_argument("--reps", type=int, default=7)
    args = ap.parse_args()

    n = array_multiplier(8)
    print(f"workload: {n.name} ({len(n.gates)} gates), "
          f"{args.vectors} vectors / {args.libs} libraries, "
          f"median of {args.reps} reps")

    p, words = _logic_workload(n, args.vectors)

    def logic(kernel):
        def run():
            kernel(p.ops, p.in0, p.in1, p.in2, p.out, words.copy())
        return run

    tp, delays = _sta_workload(n, args.libs)

    def sta(kernel):
        def run():
            kernel(tp.src, tp.dst, tp.unate, tp.arc_rise, tp.arc_fall,
                   delays, tp.init_arrivals(delays.shape[0]))
        return run

    rows = []
    t_np_logic = _time(logic(_kernels._eval_words_numpy), args.reps)
    t_np_sta = _time(sta(_kernels._sta_forward_numpy), args.reps)
    if _kernels.USING_NUMBA:
        logic(_kernels._eval_words_njit)()  # warm the JIT outside timing
        sta(_kernels._sta_forward_njit)()
        t_nb_logic = _time(logic(_kernels._eval_words_njit), args.reps)
        t_nb_sta = _time(sta(_kernels._sta_forward_njit), args.reps)
        rows.append(("eval_words", t_np_logic, t_nb_logic))
        rows.append(("sta_forward", t_np_sta, t_nb_sta))
        print(f"{'kernel':<12} {'numpy':>10} {'numba':>10} {'speedup':>8}")
        for name, tn, tj in rows:
            print(f"{name:<12} {tn * 1e3:>8.1f}ms {tj * 1e3:>8.1f}ms {tn / tj:>7.1f}x")
    else:
        print("numba backend unavailable; numpy fallback only")
        print(f"{'kernel':<12} {'numpy':>10}")
        print(f"{'eval_words':<12} {t_np_logic * 1e3:>8.1f}ms")
        print(f"{'sta_forward':<12} {t_np_sta * 1e3:>8.1f}ms")


if __name__ == "__main__":
    main()
