"""Bit-parallel functional simulation, datasets, and error metrics.

Vectors are packed 64 per machine word; gate evaluation runs over whole
words in topological order.  Output words are interpreted as unsigned or
two's-complement integers with the LSB-first bus convention (bit i of a
bus is PO position i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._compile import compile_logic
from .celllib import SampledLibrary
from .netlist import Netlist
from .timing import sta_arrivals

_FULL = np.uint64(0xFFFFFFFFFFFFFFFF)


class SimulationError(Exception):
    """Dataset/netlist mismatch or unsupported configuration."""


@dataclass
class SimulationDataset:
    """Input stimulus: one row per vector, one column per PI (0/1)."""

    vectors: np.ndarray
    pi_names: tuple[str, ...]
    seed: int
    signed: bool = False

    @property
    def n_vectors(self) -> int:
        return int(self.vectors.shape[0])

    def __post_init__(self):
        v = self.vectors
        if v.ndim != 2 or v.shape[1] != len(self.pi_names):
            raise SimulationError("vector matrix does not match PI names")
        if v.size and int(v.max(initial=0)) > 1:
            raise SimulationError("vectors must be 0/1")


EXHAUSTIVE_LIMIT = 20  # 2^20 vectors; beyond this exhaustive mode is refused


def generate_dataset(
    n: Netlist, count: int, seed: int, exhaustive: bool = False, signed: bool = False
) -> SimulationDataset:
    """Uniform random vectors, or every input combination when exhaustive."""
    n_pi = len(n.inputs)
    if exhaustive:
        if n_pi > EXHAUSTIVE_LIMIT:
            raise SimulationError(
                f"exhaustive dataset over {n_pi} inputs exceeds 2^{EXHAUSTIVE_LIMIT}"
            )
        total = 1 << n_pi
        idx = np.arange(total, dtype=np.uint32)
        vectors = np.empty((total, n_pi), dtype=np.uint8)
        for j in range(n_pi):
            vectors[:, j] = (idx >> j) & 1
        return SimulationDataset(vectors, n.inputs, seed, signed)
    if count <= 0:
        raise SimulationError("count must be positive")
    rng = np.random.default_rng(seed)
    vectors = rng.integers(0, 2, size=(count, n_pi), dtype=np.uint8)
    return SimulationDataset(vectors, n.inputs, seed, signed)


def save_dataset(path, ds: SimulationDataset):
    """One hex vector per line (PI bits packed LSB-first) after a header."""
    width = (len(ds.pi_names) + 3) // 4
    with open(path, "w") as f:
        f.write("pis " + " ".join(ds.pi_names) + "\n")
        f.write(f"seed {ds.seed}\n")
        f.write(f"count {ds.n_vectors}\n")
        f.write(f"signed {int(ds.signed)}\n")
        for row in ds.vectors:
            v = 0
            for j, bit in enumerate(row):
                v |= int(bit) << j
            f.write(f"{v:0{width}x}\n")


def load_dataset(path) -> SimulationDataset:
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    try:
        pis = tuple(lines[0].split()[1:])
        seed = int(lines[1].split()[1])
        count = int(lines[2].split()[1])
        signed = bool(int(lines[3].split()[1]))
    except (IndexError, ValueError) as e:
        raise SimulationError(f"malformed dataset header in {path}: {e}") from e
    vectors = np.zeros((count, len(pis)), dtype=np.uint8)
    body = lines[4:]
    if len(body) != count:
        raise SimulationError(f"{path}: header says {count} vectors, found {len(body)}")
    for i, ln in enumerate(body):
        v = int(ln, 16)
        for j in range(len(pis)):
            vectors[i, j] = (v >> j) & 1
    return SimulationDataset(vectors, pis, seed, signed)


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """(N,) 0/1 -> packed uint64 words, vector i at bit position i%64."""
    n = bits.shape[0]
    n_words = (n + 63) // 64
    raw = np.packbits(bits.astype(np.uint8), bitorder="little")
    buf = np.zeros(n_words * 8, dtype=np.uint8)
    buf[: raw.shape[0]] = raw
    return buf.view(np.uint64)


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of pack_bits for the first n vectors."""
    return np.unpackbits(words.view(np.uint8), bitorder="little")[:n].astype(np.uint8)


class Evaluator:
    """Compiled bit-parallel evaluator for one netlist."""

    def __init__(self, n: Netlist):
        self.netlist = n
        self.program = compile_logic(n)

    def _check(self, ds: SimulationDataset):
        if ds.pi_names != self.netlist.inputs:
            raise SimulationError(
                f"dataset PIs {ds.pi_names} do not match netlist PIs "
                f"{self.netlist.inputs}"
            )

    def signal_words(self, ds: SimulationDataset) -> np.ndarray:
        """All signal rows (constants, PIs, gate outputs) as packed words."""
        self._check(ds)
        n = ds.n_vectors
        n_words = (n + 63) // 64
        p = self.program
        words = np.zeros((p.n_signals, n_words), dtype=np.uint64)
        words[1, :] = _FULL
        for j, row in enumerate(p.pi_index):
            words[row] = pack_bits(ds.vectors[:, j])
        _kernels.eval_words(p.ops, p.in0, p.in1, p.in2, p.out, words)
        return words

    def po_bits(self, ds: SimulationDataset) -> np.ndarray:
        """(N, n_po) output bit matrix."""
        words = self.signal_words(ds)
        n = ds.n_vectors
        out = np.empty((n, len(self.netlist.outputs)), dtype=np.uint8)
        for j, row in enumerate(self.program.po_index):
            out[:, j] = unpack_bits(words[row], n)
        return out

    def net_bits(self, ds: SimulationDataset, nets) -> dict[str, np.ndarray]:
        words = self.signal_words(ds)
        n = ds.n_vectors
        idx = self.program.signal_index
        return {w: unpack_bits(words[idx[w]], n) for w in nets}

    def __call__(self, vectors: np.ndarray) -> np.ndarray:
        """PO bit matrix for a raw (N, n_pi) 0/1 vector array."""
        ds = SimulationDataset(
            np.asarray(vectors, dtype=np.uint8), self.netlist.inputs, -1, False
        )
        return self.po_bits(ds)


def compile_evaluator(n: Netlist) -> Evaluator:
    return Evaluator(n)


def interpret_values(bits: np.ndarray, signed: bool = False):
    """Bus values from a (N, n_po) bit matrix, LSB-first.

    Returns int64 when the bus fits, else a list of Python ints.
    """
    n, width = bits.shape
    if width <= 62:
        weights = (np.int64(1) << np.arange(width, dtype=np.int64))
        vals = bits.astype(np.int64) @ weights
        if signed and width:
            vals = np.where(
                bits[:, -1].astype(bool), vals - (np.int64(1) << np.int64(width)), vals
            )
        return vals
    packed = np.packbits(bits, axis=1, bitorder="little")
    vals = [int.from_bytes(row.tobytes(), "little") for row in packed]
    if signed and width:
        top = 1 << width
        vals = [v - top if bits[i, -1] else v for i, v in enumerate(vals)]
    return vals


@dataclass(frozen=True)
class ErrorMetrics:
    nmed: float
    mred: float
    error_rate: float
    max_ed: int
    n_vectors: int


def _metrics_from_bits(
    exact_bits: np.ndarray, approx_bits: np.ndarray, signed: bool
) -> ErrorMetrics:
    n, width = exact_bits.shape
    exact = interpret_values(exact_bits, signed)
    approx = interpret_values(approx_bits, signed)
    if isinstance(exact, np.ndarray):
        ed = np.abs(approx - exact)
        total = int(sum(ed.tolist()))
        max_ed = int(ed.max(initial=0))
        errors = int(np.count_nonzero(ed))
        rel = float(np.mean(ed / np.maximum(1, np.abs(exact)))) if n else 0.0
    else:
        ed = [abs(a - e) for a, e in zip(approx, exact)]
        total = sum(ed)
        max_ed = max(ed, default=0)
        errors = sum(1 for d in ed if d)
        rel = sum(d / max(1, abs(e)) for d, e in zip(ed, exact)) / n if n else 0.0
    denom = (1 << width) - 1 if width else 1
    nmed = total / (n * denom) if n else 0.0
    return ErrorMetrics(nmed, rel, errors / n if n else 0.0, max_ed, n)


def simulate_metrics(
    exact: Netlist, approx: Netlist, ds: SimulationDataset
) -> ErrorMetrics:
    """Error metrics of `approx` against `exact` over the dataset.

    The two netlists must agree on PI names/order and PO count.
    """
    if exact.inputs != approx.inputs:
        raise SimulationError("netlists disagree on primary inputs")
    if len(exact.outputs) != len(approx.outputs):
        raise SimulationError("netlists disagree on primary output count")
    e_bits = Evaluator(exact).po_bits(ds)
    a_bits = Evaluator(approx).po_bits(ds)
    return _metrics_from_bits(e_bits, a_bits, ds.signed)


def timing_error_metrics(
    n: Netlist, lib: SampledLibrary, clock_ps: float, ds: SimulationDataset
) -> ErrorMetrics:
    """Stale-value timing errors at a clock period under one sampled library.

    A PO whose worst arrival exceeds clock_ps misses the deadline on every
    vector and outputs the previous vector's settled value; the first
    vector is assumed settled.  Error metrics compare against the fully
    settled outputs.
    """
    if clock_ps <= 0.0:
        raise SimulationError("clock period must be positive")
    sta = sta_arrivals(n, lib)
    exact_bits = Evaluator(n).po_bits(ds)
    stale = exact_bits.copy()
    for j, arrival in enumerate(sta.po_arrivals):
        if arrival > clock_ps:
            stale[1:, j] = exact_bits[:-1, j]
    return _metrics_from_bits(exact_bits, stale, ds.signed)
