"""The numba kernels must agree with the numpy fallbacks bit for bit."""

import numpy as np
import pytest

from vaxcirc import _kernels
from vaxcirc._compile import compile_logic, compile_timing
from vaxcirc.celllib import default_library, sample_matrix
from vaxcirc.errsim import pack_bits

from _oracles import random_dag

needs_numba = pytest.mark.skipif(
    not _kernels.USING_NUMBA, reason="numba disabled or unavailable"
)


def _logic_args(n, rng, n_vectors=257):
    p = compile_logic(n)
    n_words = (n_vectors + 63) // 64
    words = np.zeros((p.n_signals, n_words), dtype=np.uint64)
    words[1, :] = np.uint64(0xFFFFFFFFFFFFFFFF)
    for row in p.pi_index:
        words[row] = pack_bits(rng.integers(0, 2, n_vectors, dtype=np.uint8))
    return p, words


def _timing_args(n, lib, rng, k=7):
    p = compile_timing(n, lib.arc_index())
    delays = sample_matrix(lib, range(k))
    arrivals = p.init_arrivals(k)
    return p, delays, arrivals


@needs_numba
def test_eval_words_matches_numpy():
    rng = np.random.default_rng(0)
    for trial in range(10):
        n = random_dag(rng, int(rng.integers(5, 40)), n_pis=5)
        p, words = _logic_args(n, rng)
        a = words.copy()
        b = words.copy()
        _kernels._eval_words_numpy(p.ops, p.in0, p.in1, p.in2, p.out, a)
        _kernels._eval_words_njit(p.ops, p.in0, p.in1, p.in2, p.out, b)
        assert np.array_equal(a, b)


@needs_numba
def test_sta_forward_matches_numpy_bitwise():
    rng = np.random.default_rng(1)
    lib = default_library()
    for trial in range(10):
        n = random_dag(rng, int(rng.integers(5, 40)), n_pis=5)
        p, delays, arrivals = _timing_args(n, lib, rng)
        a = arrivals.copy()
        b = arrivals.copy()
        _kernels._sta_forward_numpy(
            p.src, p.dst, p.unate, p.arc_rise, p.arc_fall, delays, a
        )
        _kernels._sta_forward_njit(
            p.src, p.dst, p.unate, p.arc_rise, p.arc_fall, delays, b
        )
        assert a.tobytes() == b.tobytes()


def test_dispatch_consistent_with_flag():
    # the exported symbols point at whichever implementation is active
    if _kernels.USING_NUMBA:
        assert _kernels.eval_words is _kernels._eval_words_njit
        assert _kernels.sta_forward is _kernels._sta_forward_njit
    else:
        assert _kernels.eval_words is _kernels._eval_words_numpy
        assert _kernels.sta_forward is _kernels._sta_forward_numpy
