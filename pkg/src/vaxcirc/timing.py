"""Static and statistical timing: arrival propagation, RV algebra, CPB.

Deterministic STA propagates dual-transition (rise, fall) arrivals per net
for one or many sampled libraries at once.  The statistical traversal
carries one Gaussian arrival RV per net, selects each gate's winning fanin
by pairwise exceedance probability, and back-propagates critical-path
probabilities (CPB) from the primary outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._compile import TimingProgram, compile_timing
from .celllib import SampledLibrary, VariationLibrary, sample_matrix
from .netlist import CONSTANT_NETS, NEGATIVE, NON_UNATE, Netlist

NEG_INF = float("-inf")
_EDGE_COL = {"rise": 0, "fall": 1}
_COL_EDGE = ("rise", "fall")


# -- Gaussian delay algebra ---------------------------------------------------


@dataclass(frozen=True)
class DelayRV:
    """Gaussian delay in ps: mean and variance."""

    mu: float
    var: float

    def __post_init__(self):
        if self.var < 0.0:
            raise ValueError(f"negative variance {self.var}")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.var)


def normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc; absolute error well under 1e-12."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def rv_sum(x: DelayRV, y: DelayRV) -> DelayRV:
    """Sum of independent Gaussians: means and variances add."""
    return DelayRV(x.mu + y.mu, x.var + y.var)


def rv_gt_prob(x: DelayRV, y: DelayRV) -> float:
    """P(X > Y) for independent Gaussians.

    Both degenerate (zero variance): 1.0 / 0.0 by mean comparison, 0.5 on
    exact tie.
    """
    v = x.var + y.var
    if v == 0.0:
        if x.mu > y.mu:
            return 1.0
        if x.mu < y.mu:
            return 0.0
        return 0.5
    return 1.0 - normal_cdf((y.mu - x.mu) / math.sqrt(v))


# -- deterministic STA --------------------------------------------------------


@dataclass
class StaResult:
    netlist: Netlist
    library: SampledLibrary
    arrivals: dict[str, tuple[float, float]]  # net -> (rise, fall)
    po_arrivals: tuple[float, ...]  # worst arrival per PO position
    cpd: float
    endpoint: tuple[int, str, str] | None  # (po position, net, edge)


def _endpoint_from_matrix(arr_k: np.ndarray, po_rows: np.ndarray):
    """Worst (value, po position, column) over PO rows; None if all -inf."""
    best = NEG_INF
    where = None
    for pos in range(po_rows.shape[0]):
        row = po_rows[pos]
        if row < 0:
            continue
        for col in (0, 1):
            v = arr_k[row, col]
            if v > best:
                best = v
                where = (pos, col)
    if where is None or best == NEG_INF:
        return None
    return best, where[0], where[1]


def sta_arrivals(n: Netlist, lib: SampledLibrary) -> StaResult:
    """Single-library dual-transition STA.

    PIs launch both transitions at t=0, constants never transition, each
    gate input pin contributes arc delays according to its unateness.
    """
    program = compile_timing(n, lib.arc_index())
    delays = lib.values()[None, :]
    arr = program.init_arrivals(1)
    _kernels.sta_forward(
        program.src, program.dst, program.unate,
        program.arc_rise, program.arc_fall, delays, arr,
    )
    a = arr[0]
    arrivals = {
        net: (float(a[row, 0]), float(a[row, 1]))
        for net, row in program.net_index.items()
    }
    po_vals = []
    for po in n.outputs:
        row = program.net_index.get(po, -1)
        po_vals.append(float(max(a[row, 0], a[row, 1])) if row >= 0 else NEG_INF)
    hit = _endpoint_from_matrix(a, program.po_rows)
    if hit is None:
        return StaResult(n, lib, arrivals, tuple(po_vals), 0.0, None)
    cpd, pos, col = hit
    return StaResult(
        n, lib, arrivals, tuple(po_vals), cpd, (pos, n.outputs[pos], _COL_EDGE[col])
    )


def _in_edges(unateness: str, out_edge: str):
    if unateness == NEGATIVE:
        return ("fall",) if out_edge == "rise" else ("rise",)
    if unateness == NON_UNATE:
        return ("rise", "fall")
    return (out_edge,)


def _backtrack_path(n: Netlist, net: str, edge: str, arrival, delay):
    """Walk a critical path backward from (net, edge).

    `arrival(net, edge)` and `delay(kind, pin, out_edge)` are lookups;
    ties resolve to the first candidate in pin order, rise before fall.
    Returns [(gate, input pin, output edge)] from inputs toward the PO.
    """
    path = []
    g = n.driver_of(net)
    while g is not None:
        best = None
        for pin, un in zip(g.cell.input_pins, g.cell.unateness):
            w = g.fanin[pin]
            if w in CONSTANT_NETS:
                continue
            for ie in _in_edges(un, edge):
                v = arrival(w, ie) + delay(g.kind, pin, edge)
                if best is None or v > best[0]:
                    best = (v, pin, ie)
        if best is None:  # all-constant fanin gate cannot be on a real path
            break
        path.append((g.name, best[1], edge))
        net, edge = g.fanin[best[1]], best[2]
        g = n.driver_of(net)
    path.reverse()
    return path


def extract_critical_path(sta: StaResult):
    """[(gate, input pin, output edge)] along the winning path, PI to PO."""
    if sta.endpoint is None:
        return []
    _, net, edge = sta.endpoint

    def arrival(w, e):
        return sta.arrivals[w][_EDGE_COL[e]]

    return _backtrack_path(sta.netlist, net, edge, arrival, sta.library.delay)


def mc_sta_cpd(
    n: Netlist, lib: VariationLibrary, count: int, seed: int, rho=None
) -> np.ndarray:
    """CPD per sampled library for seeds seed..seed+count-1; shape (count,)."""
    program = compile_timing(n, lib.arc_index())
    delays = sample_matrix(lib, range(seed, seed + count), rho)
    return cpd_over_delays(program, delays)


def cpd_over_delays(program: TimingProgram, delays: np.ndarray) -> np.ndarray:
    """CPD per delay row for an already-compiled netlist."""
    arr = program.init_arrivals(delays.shape[0])
    _kernels.sta_forward(
        program.src, program.dst, program.unate,
        program.arc_rise, program.arc_fall, delays, arr,
    )
    rows = program.po_rows[program.po_rows >= 0]
    if rows.size == 0:
        return np.zeros(delays.shape[0], dtype=np.float64)
    return arr[:, rows, :].max(axis=(1, 2))


# -- edge-transition annotation ----------------------------------------------


def annotate_edge_transitions(
    n: Netlist, lib: VariationLibrary, count: int = 200, seed: int = 0, rho=None
) -> dict[tuple[str, str], str]:
    """Modal critical-path output edge per (gate, input pin).

    Runs STA over `count` sampled libraries, extracts each winning path,
    and tallies which output transition each traversed (gate, pin) carried.
    Pairs never observed on a path (and tally ties) default to the edge
    with the larger mean arc delay; equal means default to rise.
    """
    program = compile_timing(n, lib.arc_index())
    delays = sample_matrix(lib, range(seed, seed + count), rho)
    arr = program.init_arrivals(count)
    _kernels.sta_forward(
        program.src, program.dst, program.unate,
        program.arc_rise, program.arc_fall, delays, arr,
    )
    index = program.net_index
    counts: dict[tuple[str, str], dict[str, int]] = {}
    for k in range(count):
        a_k = arr[k]
        hit = _endpoint_from_matrix(a_k, program.po_rows)
        if hit is None:
            continue
        _, pos, col = hit
        d_k = delays[k]
        arc_index = lib.arc_index()

        def arrival(w, e, a_k=a_k):
            return a_k[index[w], _EDGE_COL[e]]

        def delay(kind, pin, e, d_k=d_k, arc_index=arc_index):
            return d_k[arc_index[(kind, pin, e)]]

        path = _backtrack_path(
            n, n.outputs[pos], _COL_EDGE[col], arrival, delay
        )
        for gate, pin, edge in path:
            tally = counts.setdefault((gate, pin), {"rise": 0, "fall": 0})
            tally[edge] += 1

    tmap: dict[tuple[str, str], str] = {}
    for g in n.gates:
        for pin in g.cell.input_pins:
            if g.fanin[pin] in CONSTANT_NETS:
                continue
            tally = counts.get((g.name, pin))
            if tally is not None and tally["rise"] != tally["fall"]:
                tmap[(g.name, pin)] = (
                    "rise" if tally["rise"] > tally["fall"] else "fall"
                )
            else:
                mu_r = lib.arc(g.kind, pin, "rise").mu_ps
                mu_f = lib.arc(g.kind, pin, "fall").mu_ps
                tmap[(g.name, pin)] = "fall" if mu_f > mu_r else "rise"
    return tmap


# -- statistical traversal ----------------------------------------------------


@dataclass
class SstaResult:
    netlist: Netlist
    arrivals: dict[str, DelayRV]  # net -> arrival RV
    po_rvs: dict[str, DelayRV]  # distinct non-constant PO nets
    endpoint: str | None
    cpd: DelayRV
    confidence: float
    endpoint_probs: dict[str, float]
    critical_fanin: dict[str, str]  # gate -> winning input pin
    cpb: dict[str, float] = field(default_factory=dict)


def ssta_traverse(
    n: Netlist, lib: VariationLibrary, tmap: dict[tuple[str, str], str]
) -> SstaResult:
    """Selection-then-sum stochastic traversal.

    Each gate picks the fanin whose arrival RV wins iterated pairwise
    exceedance comparisons (running winner; P=0.5 keeps the earlier pin),
    then adds the arc RV for (winning pin, tmap edge).  This estimates the
    single most probable critical path rather than a moment-matched max,
    so reconvergent structures carry a known optimistic bias.
    """
    arrivals: dict[str, DelayRV] = {pi: DelayRV(0.0, 0.0) for pi in n.inputs}
    critical_fanin: dict[str, str] = {}
    for g in n.topological_order():
        winner = None
        win_rv = None
        for pin in g.cell.input_pins:
            w = g.fanin[pin]
            if w in CONSTANT_NETS:
                continue
            rv = arrivals.get(w)
            if rv is None:
                continue
            if win_rv is None or rv_gt_prob(rv, win_rv) > 0.5:
                winner, win_rv = pin, rv
        if winner is None:
            continue  # all fanins constant: no transitions to time
        arc = lib.arc(g.kind, winner, tmap[(g.name, winner)])
        arrivals[g.output] = rv_sum(win_rv, DelayRV(arc.mu_ps, arc.sigma_ps**2))
        critical_fanin[g.name] = winner

    po_rvs: dict[str, DelayRV] = {}
    for po in n.outputs:
        if po in CONSTANT_NETS or po in po_rvs:
            continue
        rv = arrivals.get(po)
        if rv is not None:
            po_rvs[po] = rv

    if not po_rvs:
        return SstaResult(
            n, arrivals, {}, None, DelayRV(0.0, 0.0), 1.0, {}, critical_fanin, {}
        )

    nets = list(po_rvs)
    endpoint = nets[0]
    for cand in nets[1:]:
        if rv_gt_prob(po_rvs[cand], po_rvs[endpoint]) > 0.5:
            endpoint = cand

    weights = {}
    for i in nets:
        c = 1.0
        for j in nets:
            if j != i:
                c *= rv_gt_prob(po_rvs[i], po_rvs[j])
        weights[i] = c
    total = sum(weights.values())
    if total > 0.0:
        probs = {i: w / total for i, w in weights.items()}
    else:  # all weights underflowed; fall back to the selected endpoint
        probs = {i: (1.0 if i == endpoint else 0.0) for i in nets}

    result = SstaResult(
        n,
        arrivals,
        po_rvs,
        endpoint,
        po_rvs[endpoint],
        weights[endpoint],
        probs,
        critical_fanin,
    )
    result.cpb = cpb_backprop(n, probs, critical_fanin)
    return result


def cpb_backprop(
    n: Netlist,
    endpoint_probs: dict[str, float],
    critical_fanin: dict[str, str],
) -> dict[str, float]:
    """Push endpoint probability mass back along winning fanins.

    Each net starts with its endpoint probability (0 for non-endpoints);
    every gate forwards the mass on its output net to its winning fanin
    net.  Mass is conserved: the sum over the PI frontier equals the sum
    of the endpoint probabilities.
    """
    cpb: dict[str, float] = {net: 0.0 for net in n.nets}
    for net, p in endpoint_probs.items():
        cpb[net] += p
    for g in reversed(n.topological_order()):
        mass = cpb.get(g.output, 0.0)
        pin = critical_fanin.get(g.name)
        if mass > 0.0 and pin is not None:
            cpb[g.fanin[pin]] += mass
    return cpb
