"""Noise, syndrome statistics and a staged heralded decoder for the S3 code.

Decoding runs in three stages:

1. ``B_p`` flux syndromes are paired with X strings.  ``Ã_v`` is measured alongside
   (it commutes with every ``B_p``) and a nontrivial ``Ã_v`` next to a candidate string
   counts as a herald in its favour.
2. With all ``B_p = +1`` the ``Ã_v`` and ``B̃_p`` syndromes commute and are fused pair by
   pair with the adaptive circuits: walk the path, cancel the current syndrome with a
   ``Zq`` (``Xq``) power on the next edge, measure the next vertex (plaquette) and repeat.
3. The leftover Abelian ``A_v`` charges are matched with Z strings.

Two backends share the pairing logic.  ``exact`` acts on the dense state; ``syndrome``
keeps an Abelian error frame and samples non-Abelian syndromes from the single-error
oracle, which is an approximation (see :func:`run_trial_syndrome`).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import networkx as nx
import numpy as np

from .double import (Controls, ProjectorSuite, SyndromeRecord, injected_logicals,
                     prepare_s3_patch, projector_suite)
from .hilbert import XQ, ZQ, X, Z, Op, cpow, gate, product
from .lattice import (QUBIT, QUTRIT, LayeredLayout, UnmatchedSyndrome, _dual_graph,
                      _primal_graph, abelian_decode, correction_op, error_syndrome, qsite,
                      tsite)

LOG2, LOG3 = math.log(2), math.log(3)
ERROR_KINDS = ("X", "Z", "Xq", "Zq")


# --- noise -----------------------------------------------------------------------------

@dataclass(frozen=True)
class ErrorModel:
    """Independent per-site rates; order-3 errors pick the power +-1 uniformly."""

    p_X: float = 0.0
    p_Z: float = 0.0
    p_Xq: float = 0.0
    p_Zq: float = 0.0

    def __post_init__(self):
        for name in ("p_X", "p_Z", "p_Xq", "p_Zq"):
            p = getattr(self, name)
            if not 0.0 <= p <= 0.5:
                raise ValueError(f"{name}={p} outside [0, 1/2]")

    def as_dict(self) -> dict:
        return {"p_X": self.p_X, "p_Z": self.p_Z, "p_Xq": self.p_Xq, "p_Zq": self.p_Zq}

    @classmethod
    def uniform(cls, p: float) -> "ErrorModel":
        return cls(p, p, p, p)


class HiddenErrorLog:
    """Errors applied by :func:`inject_errors`.

    Decoder entry points never take this type; only evaluation code calls
    :meth:`reveal`.
    """

    __slots__ = ("_entries",)

    def __init__(self):
        self._entries = []

    def _add(self, kind, edge, power):
        self._entries.append((kind, tuple(edge), int(power)))

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        return f"HiddenErrorLog(<{len(self._entries)} entries>)"

    def reveal(self) -> list:
        return list(self._entries)


def error_op(kind: str, edge, power: int = 1) -> Op:
    mats = {"X": X, "Z": Z, "Xq": XQ, "Zq": ZQ}
    site = qsite(edge) if kind in ("X", "Z") else tsite(edge)
    return cpow(site, mats[kind], power=power)


def error_region(layout: LayeredLayout) -> list:
    """``(kind, edge)`` slots in a fixed order: qubit edges then qutrit edges."""
    out = []
    for e in sorted(layout.edges(layout.qubit_window)):
        out += [("X", e), ("Z", e)]
    for e in sorted(layout.edges(layout.qutrit_window)):
        out += [("Xq", e), ("Zq", e)]
    return out


def sample_errors(model: ErrorModel, region, rng) -> list:
    """Draw ``(kind, edge, power)`` triples; two uniforms per slot keep streams aligned."""
    rates = {"X": model.p_X, "Z": model.p_Z, "Xq": model.p_Xq, "Zq": model.p_Zq}
    out = []
    for kind, e in region:
        u, w = rng.random(2)
        if u < rates[kind]:
            power = 1 if kind in ("X", "Z") else (1 if w < 0.5 else -1)
            out.append((kind, e, power))
    return out


def inject_errors(state, model: ErrorModel, region, rng, forced=None):
    """Apply sampled (or ``forced``) errors.  Returns ``(state, HiddenErrorLog)``."""
    log = HiddenErrorLog()
    errors = list(forced) if forced is not None else sample_errors(model, region, rng)
    for kind, e, power in errors:
        if state is not None:
            state.apply(error_op(kind, e, power))
        log._add(kind, e, power)
    return state, log


# --- oracle ------------------------------------------------------------------------------

@dataclass
class SyndromeDistribution:
    """Per-stabilizer outcome distributions ``(kind, loc) -> tuple of Fractions``.

    Entries not listed are trivial with certainty.  Joint outcomes of different
    stabilizers are not tabulated; :meth:`sample` treats them as independent.
    """

    error: tuple
    marginals: dict = field(default_factory=dict)

    def probability(self, kind, loc, e) -> Fraction:
        dist = self.marginals.get((kind, tuple(loc)))
        if dist is None:
            return Fraction(1 if e == 0 else 0)
        return dist[e]

    def check(self) -> None:
        for key, dist in self.marginals.items():
            if sum(dist) != 1:
                raise ValueError(f"distribution for {key} does not sum to 1")

    def sample(self, rng) -> dict:
        out = {}
        for key in sorted(self.marginals, key=repr):
            dist = self.marginals[key]
            out[key] = int(rng.choice(len(dist), p=[float(p) for p in dist]))
        return out


def _leg_on(op: Op, site):
    for leg in op.legs:
        if site in leg.sites:
            return leg
    return None


def _leg_sign(leg, m) -> int:
    """+1 if the leg's unconditioned matrix is ``m``, -1 if it is ``m``'s adjoint."""
    if np.allclose(leg.on_plus, m):
        return 1
    if np.allclose(leg.on_plus, m.conj().T):
        return -1
    raise ValueError("leg is not a power of the expected generator")


def _det(mod, e):
    return tuple(Fraction(1 if i == e % mod else 0) for i in range(mod))


def syndrome_oracle(kind: str, edge, layout: LayeredLayout, controls: Controls,
                    power: int = 1, suite: ProjectorSuite | None = None) -> SyndromeDistribution:
    """Single-error syndrome distribution from the local rules of the S3 code.

    * ``Zq^k`` on ``e``: an endpoint whose ``Ã`` leg on ``e`` is unconditioned moves to
      ``w^(-s k)``; a conditioned endpoint lands on ``w`` or ``w^2`` with 1/2 each;
      every ``A_v`` carrying the symmetry on ``e`` is -1 with probability 1/2.
    * ``Xq^k``: the same with plaquettes and ``B̃``.
    * qubit ``Z``: the two ``A_v`` at the endpoints flip.
    * qubit ``X``: the two ``B_p`` flip; each ``Ã``/``B̃`` conditioned on the hit qubit
      is uniform over its three values.
    """
    edge = tuple(edge)
    suite = suite or projector_suite(layout, controls)
    if kind in ("X", "Z"):
        if edge not in layout.edges(layout.qubit_window):
            raise ValueError(f"{edge} is not a qubit edge of the layout")
    elif edge not in layout.edges(layout.qutrit_window):
        raise ValueError(f"{edge} is not a qutrit edge of the layout")
    dist = SyndromeDistribution((kind, edge, power))
    half, third = Fraction(1, 2), Fraction(1, 3)
    if kind == "Z":
        for u in layout.edge_endpoints(edge):
            if u in suite.A:
                dist.marginals[("A", u)] = _det(2, 1)
    elif kind == "X":
        for p in suite.B:
            if edge in layout.plaquette_legs(p, layout.qubit_window).values():
                dist.marginals[("B", p)] = _det(2, 1)
        q = qsite(edge)
        for fam, name in ((suite.At, "At"), (suite.Bt, "Bt")):
            for loc, op in fam.items():
                if any(q in leg.cond for leg in op.legs):
                    dist.marginals[(name, loc)] = (third, third, third)
    else:
        t = tsite(edge)
        fam, name, m = (suite.At, "At", XQ) if kind == "Zq" else (suite.Bt, "Bt", ZQ)
        for loc, op in fam.items():
            leg = _leg_on(op, t)
            if leg is None:
                continue
            s = _leg_sign(leg, m)
            shift = (-s * power) % 3 if kind == "Zq" else (s * power) % 3
            if leg.cond:
                dist.marginals[(name, loc)] = tuple(
                    Fraction(0) if i == 0 else half for i in range(3))
            else:
                dist.marginals[(name, loc)] = _det(3, shift)
        for v in controls.get(edge):
            if v in suite.A:
                dist.marginals[("A", v)] = (half, half)
    dist.check()
    return dist


def exact_distribution(state, kind, edge, suite: ProjectorSuite, power: int = 1) -> dict:
    """Born-rule marginals of every suite element after applying one error to ``state``."""
    st = state.copy().apply(error_op(kind, edge, power))
    out = {}
    for name, fam in suite.families().items():
        for loc, op in fam.items():
            out[(name, loc)] = tuple(st.outcome_probabilities(op))
    return out


# --- pairing -----------------------------------------------------------------------------

def charge_graph(layout: LayeredLayout, stage: str) -> tuple:
    """``(graph, boundary nodes)`` on which syndromes of ``stage`` are paired.

    ``B``: qubit dual lattice (top/bottom).  ``C``: qutrit primal lattice (left/right).
    ``F``: qutrit dual lattice (top/bottom).
    """
    if stage == "B":
        return _dual_graph(layout, layout.qubit_window), ("T", "B")
    if stage == "C":
        return _primal_graph(layout, layout.qutrit_window), ("L", "R")
    if stage == "F":
        return _dual_graph(layout, layout.qutrit_window), ("T", "B")
    raise ValueError(f"unknown stage {stage!r}")


def _path_edges(g, path) -> list:
    return [g.edges[u, w]["edge"] for u, w in zip(path, path[1:])]


def candidate_paths(g, src, dst, slack: int = 2) -> list:
    """Simple paths from ``src`` to ``dst`` no longer than shortest + ``slack``."""
    try:
        gen = nx.shortest_simple_paths(g, src, dst)
        first = next(gen)
    except (nx.NetworkXNoPath, nx.NodeNotFound):
        return []
    out = [first]
    cap = len(first) - 1 + slack
    for p in gen:
        if len(p) - 1 > cap:
            break
        out.append(p)
    return out


@dataclass
class MatchingProblem:
    """Syndromes, candidate path weights and the heralds that discounted them."""

    stage: str
    syndromes: dict
    heralds: dict = field(default_factory=dict)  # dual edge -> vertices heralding it
    slack: int = 2

    def path_weight(self, g, path) -> float:
        edges = _path_edges(g, path)
        if self.stage == "B":
            hits = set()
            for e in edges:
                hits.update(self.heralds.get(e, ()))
            return len(edges) * LOG3 - len(hits) * LOG3
        inner = [n for n in path[1:-1] if self.syndromes.get(n)]
        return len(edges) * LOG2 - len(inner) * LOG2


def plan_pairs(problem: MatchingProblem, g, boundary) -> list:
    """Minimum total weight pairing; returns a list of node paths.

    Every syndrome is paired with another one or sent to the cheapest boundary.
    Ties break deterministically on the sorted syndrome order.
    """
    locs = sorted(problem.syndromes)
    if not locs:
        return []
    best = {}

    def best_path(u, w):
        paths = candidate_paths(g, u, w, problem.slack)
        if not paths:
            return None
        scored = [(problem.path_weight(g, p), len(p), i, p) for i, p in enumerate(paths)]
        return min(scored)[0], min(scored)[3]

    for u in locs:
        opts = [bp for bp in (best_path(u, b) for b in boundary if b in g) if bp is not None]
        best[(u, None)] = min(opts, key=lambda t: t[0]) if opts else None
    for u, w in itertools.combinations(locs, 2):
        best[(u, w)] = best_path(u, w)
    m = nx.Graph()
    finite = [bp[0] for bp in best.values() if bp is not None]
    big = 10.0 * (1 + max([abs(x) for x in finite] + [1.0])) * (len(locs) + 1)
    for u in locs:
        m.add_node(("d", u))
    for u in locs:
        if best[(u, None)] is not None:
            m.add_edge(("d", u), ("b", u), weight=big - best[(u, None)][0])
    for u, w in itertools.combinations(locs, 2):
        if best[(u, w)] is not None:
            m.add_edge(("d", u), ("d", w), weight=big - best[(u, w)][0])
        if best[(u, None)] is not None and best[(w, None)] is not None:
            m.add_edge(("b", u), ("b", w), weight=big)
    matching = nx.max_weight_matching(m, maxcardinality=True)
    paths = []
    matched = set()
    for a, b in sorted(matching, key=repr):
        if a[0] == "b" and b[0] == "b":
            continue
        if a[0] == "b":
            a, b = b, a
        matched.add(a[1])
        if b[0] == "d":
            matched.add(b[1])
            paths.append(best[tuple(sorted((a[1], b[1])))][1])
        else:
            paths.append(best[(a[1], None)][1])
    if set(locs) - matched:
        raise UnmatchedSyndrome(f"no pairing for {sorted(set(locs) - matched)}")
    return sorted(paths, key=repr)


def herald_map(suite: ProjectorSuite) -> dict:
    """Qubit edge -> vertices whose ``Ã_v`` is conditioned on that qubit."""
    out: dict = {}
    for vtx, op in suite.At.items():
        for leg in op.legs:
            for c in leg.cond:
                out.setdefault(tuple(c[1:]), set()).add(vtx)
    return {e: tuple(sorted(v)) for e, v in out.items()}


def decode_Bp(record: SyndromeRecord, layout: LayeredLayout, suite: ProjectorSuite,
              slack: int = 2):
    """X strings clearing every ``B_p = -1``; heralds come from the co-measured ``Ã_v``.

    Returns ``(corrections, problem)`` with ``corrections`` a sorted list of qubit edges.
    """
    syn = {loc: 1 for (k, loc), e in record.values.items() if k == "B" and e}
    nontriv = {loc for (k, loc), e in record.values.items() if k == "At" and e}
    heralds = {e: tuple(v for v in vs if v in nontriv) for e, vs in herald_map(suite).items()}
    problem = MatchingProblem("B", syn, {e: v for e, v in heralds.items() if v}, slack)
    g, bnd = charge_graph(layout, "B")
    flips: dict = {}
    for path in plan_pairs(problem, g, bnd):
        for e in _path_edges(g, path):
            flips[e] = flips.get(e, 0) ^ 1
    return sorted(e for e, b in flips.items() if b), problem


# --- adaptive fusion ---------------------------------------------------------------------

class StageOrderViolation(RuntimeError):
    pass


@dataclass
class FusionResult:
    path: list
    kind: str
    measured: list = field(default_factory=list)  # (node, exponent) along the walk
    powers: list = field(default_factory=list)  # (edge, power applied)
    residual: int = 0  # exponent left at the far end (0: vacuum or absorbed)
    measured_conditions: list = field(default_factory=list)


def _parity_op(sites) -> Op:
    return product([gate(s, Z) for s in sites], order=2)


def fuse_nonabelian_pair(state, suite: ProjectorSuite, layout: LayeredLayout, path, kind: str,
                         rng) -> FusionResult:
    """Walk ``path`` (node list, may end on a boundary node) clearing syndromes as it goes.

    ``kind`` is ``"C"`` (``Ã_v``, ``Zq`` powers) or ``"F"`` (``B̃_p``, ``Xq`` powers).
    When the leg of the current stabilizer on the next edge is conditioned, the qubit
    parity it depends on is measured first.
    """
    if any(state.outcome_probabilities(op)[0] < 1 - 1e-9 for op in suite.B.values()):
        raise StageOrderViolation("B_p = -1 present; fuse only after the flux stage")
    fam = suite.At if kind == "C" else suite.Bt
    gen, corr = (XQ, ZQ) if kind == "C" else (ZQ, XQ)
    g, bnd = charge_graph(layout, kind)
    res = FusionResult(list(path), kind)
    cur = state.measure(fam[path[0]], rng)
    res.measured.append((path[0], cur))
    for i, (u, w) in enumerate(zip(path, path[1:])):
        e = g.edges[u, w]["edge"]
        leg = _leg_on(fam[u], tsite(e))
        s = _leg_sign(leg, gen)
        if leg.cond:
            b = state.measure(_parity_op(leg.cond), rng)
            res.measured_conditions.append((list(leg.cond), b))
            s *= -1 if b else 1
        # Xq^s Zq^k = w^(-sk) Zq^k Xq^s and Zq^s Xq^k = w^(sk) Xq^k Zq^s
        k = (cur * s) % 3 if kind == "C" else (-cur * s) % 3
        if k:
            state.apply(cpow(tsite(e), corr, power=k))
        res.powers.append((e, k))
        if w in bnd:
            res.residual = 0
            return res
        cur = state.measure(fam[w], rng)
        res.measured.append((w, cur))
    res.residual = cur
    return res


def fusion_sign_product(result: FusionResult, prior: dict) -> int | None:
    """Product of the condition signs met along a C walk, from the measured values.

    ``prior`` maps each vertex to its exponent before the walk.  Returns None when a
    zero power left a sign undetermined.
    """
    prod = 1
    for (e, k), (w, b) in zip(result.powers, result.measured[1:]):
        if not k:
            return None
        m = prior.get(w, 0)
        # new = m - z k with the left leg Xq^(Z) of w
        z = ((m - b) * k) % 3
        if z not in (1, 2):
            return None
        prod *= 1 if z == 1 else -1
    return prod


# --- decoding round (exact backend) ----------------------------------------------------

@dataclass
class DecoderReport:
    success: bool
    residual_logical: str | None
    stage_stats: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"success": self.success, "residual_logical": self.residual_logical,
                "stage_stats": self.stage_stats}


def in_ground_space(state, suite: ProjectorSuite, tol: float = 1e-6) -> bool:
    # every op is unitary, so <op> = 1 exactly on its +1 eigenspace
    return all(abs(state.expectation(op) - 1) < tol for op in suite.all_ops())


def _measure_family(state, fam, name, rng, rec):
    for loc, op in sorted(fam.items()):
        rec.set(name, loc, state.measure(op, rng))


def decode_round(state, layout: LayeredLayout, suite: ProjectorSuite, rng,
                 max_passes: int = 4, slack: int = 2) -> DecoderReport:
    """One staged correction round on the exact backend.

    The report's ``residual_logical`` is left empty; it needs a reference state and is
    filled in by :func:`classify_residual`.
    """
    stats = {"B": 0, "X_len": 0, "heralds": 0, "C": 0, "F": 0, "fusions": 0,
             "residual_C": 0, "residual_F": 0, "A": 0, "Z_len": 0}
    # stage 1: fluxes, with Ã heralds
    rec = SyndromeRecord()
    _measure_family(state, suite.B, "B", rng, rec)
    _measure_family(state, suite.At, "At", rng, rec)
    stats["B"] = len(rec.nontrivial("B"))
    if stats["B"]:
        flips, problem = decode_Bp(rec, layout, suite, slack)
        stats["X_len"] = len(flips)
        stats["heralds"] = sum(len(v) for v in problem.heralds.values())
        for e in flips:
            state.apply(gate(qsite(e), X))
    # stage 2: Ã and B̃, fused pair by pair until quiet
    for _ in range(max_passes):
        rec = SyndromeRecord()
        _measure_family(state, suite.B, "B", rng, rec)
        if rec.nontrivial("B"):
            return DecoderReport(False, None, stats)
        _measure_family(state, suite.At, "At", rng, rec)
        _measure_family(state, suite.Bt, "Bt", rng, rec)
        cs = {loc: e for (k, loc), e in rec.nontrivial("At").items()}
        fs = {loc: e for (k, loc), e in rec.nontrivial("Bt").items()}
        stats["C"] += len(cs)
        stats["F"] += len(fs)
        if not cs and not fs:
            break
        for kind, syn in (("C", cs), ("F", fs)):
            if not syn:
                continue
            g, bnd = charge_graph(layout, kind)
            fam = suite.At if kind == "C" else suite.Bt
            for path in plan_pairs(MatchingProblem(kind, syn, slack=slack), g, bnd):
                path = _orient(path, fam, g, bnd)
                res = fuse_nonabelian_pair(state, suite, layout, path, kind, rng)
                stats["fusions"] += 1
                stats["residual_" + kind] += int(res.residual != 0)
    # stage 3: Abelian charges
    rec = SyndromeRecord()
    _measure_family(state, suite.A, "A", rng, rec)
    syn = {loc: 1 for (k, loc), e in rec.nontrivial("A").items()}
    stats["A"] = len(syn)
    if syn:
        try:
            corr = abelian_decode(syn, layout, QUBIT, "vertex")
        except UnmatchedSyndrome:
            return DecoderReport(False, None, stats)
        stats["Z_len"] = len(corr)
        state.apply(correction_op(layout, QUBIT, "vertex", corr))
    return DecoderReport(in_ground_space(state, suite), None, stats)


def _orient(path, fam, g, bnd):
    """Start the walk from the end that needs fewer conditioned first legs."""
    if path[-1] in bnd:
        return path

    def cost(p):
        return sum(1 for u, w in zip(p, p[1:])
                   if _leg_on(fam[u], tsite(g.edges[u, w]["edge"])).cond)
    rev = list(reversed(path))
    return rev if cost(rev) < cost(path) else path


# --- evaluation ------------------------------------------------------------------------

def logical_candidates(layout: LayeredLayout, controls: Controls) -> dict:
    lg = injected_logicals(layout, controls, column=layout.qutrit_window[0])
    out = {}
    for a, b, c, d in itertools.product(range(2), range(2), range(3), range(3)):
        if not (a or b or c or d):
            continue
        ops = [lg["Xbar"]] * b + [lg["Zbar"]] * a + [lg["Xtbar"]] * d + [lg["Ztbar"]] * c
        name = "*".join(n for n in ("Zbar" if a else "", "Xbar" if b else "",
                                    f"Ztbar^{c}" if c else "", f"Xtbar^{d}" if d else "") if n)
        out[name] = product(ops)
    return out


def classify_residual(final, reference, candidates: dict, tol: float = 1e-6) -> str | None:
    """None if ``final`` equals ``reference`` up to phase, else the matching logical."""
    f = final.fidelity(reference)
    if f > 1 - tol:
        return None
    for name, op in candidates.items():
        if final.fidelity(reference.copy().apply(op)) > 1 - tol:
            return name
    return f"unidentified(fidelity={f:.6f})"


# --- patches and trials ----------------------------------------------------------------

REFERENCE_AMPS = np.array([[1, 1j, -1], [0.5, 2, 1 - 1j]], dtype=complex)
REFERENCE_AMPS /= np.linalg.norm(REFERENCE_AMPS)


@dataclass
class Patch:
    state: object
    layout: LayeredLayout
    controls: Controls
    suite: ProjectorSuite
    candidates: dict


@lru_cache(maxsize=4)
def prepared_patch(rows: int = 2, columns: int = 3, qutrit_window: tuple = (1, 2),
                   seed: int = 0) -> Patch:
    """S3 patch holding a generic logical state, so that any residual logical shows."""
    rng = np.random.default_rng(seed)
    st, lay, ctl = prepare_s3_patch(rows, columns, qutrit_window, rng, amps=REFERENCE_AMPS)
    return Patch(st, lay, ctl, projector_suite(lay, ctl), logical_candidates(lay, ctl))


def run_trial_exact(patch: Patch, model: ErrorModel, rng, forced=None):
    """Inject, decode, and compare against the untouched patch.  Returns ``(report, log)``."""
    st = patch.state.copy()
    _, log = inject_errors(st, model, error_region(patch.layout), rng, forced)
    rep = decode_round(st, patch.layout, patch.suite, rng)
    if rep.success:
        rep.residual_logical = classify_residual(st, patch.state, patch.candidates)
    return rep, log


# --- syndrome-level backend ------------------------------------------------------------

@dataclass
class ErrorFrame:
    """Abelian error chains: qubit X/Z (mod 2) and qutrit Xq/Zq powers (mod 3)."""

    x: dict = field(default_factory=dict)
    z: dict = field(default_factory=dict)
    xq: dict = field(default_factory=dict)
    zq: dict = field(default_factory=dict)

    def add(self, kind, e, k):
        d, mod = {"X": (self.x, 2), "Z": (self.z, 2), "Xq": (self.xq, 3),
                  "Zq": (self.zq, 3)}[kind]
        d[e] = (d.get(e, 0) + k) % mod
        if not d[e]:
            del d[e]


def frame_residual(frame: ErrorFrame, layout: LayeredLayout) -> str | None:
    """Logical class of the net chains, read off against complementary logicals."""
    a, b = layout.qubit_window
    ta, tb = layout.qutrit_window
    xb = sum(frame.x.get(("h", x, 0), 0) for x in range(a, b + 1)) % 2
    zb = sum(frame.z.get(("h", a, y), 0) for y in range(layout.rows)) % 2
    xt = sum(frame.xq.get(("h", x, 0), 0) for x in range(ta, tb + 1)) % 3
    zt = sum(frame.zq.get(("h", ta, y), 0) for y in range(layout.rows)) % 3
    parts = [n for n, f in (("Zbar", zb), ("Xbar", xb)) if f]
    parts += [f"{n}^{f}" for n, f in (("Ztbar", zt), ("Xtbar", xt)) if f]
    return "*".join(parts) or None


def _sample_marginals(dist: SyndromeDistribution, rng, acc: dict):
    for key, e in dist.sample(rng).items():
        mod = 2 if key[0] in ("A", "B") else 3
        acc[key] = (acc.get(key, 0) + e) % mod


def run_trial_syndrome(patch: Patch, model: ErrorModel, rng, forced=None):
    """Decode from oracle-sampled syndromes on an Abelian error frame.

    Approximations: overlapping errors add their sampled syndromes; the back-action of
    the heralding ``Ã`` measurement is a uniform ``Xq`` power on each conditioned leg; a
    fusion walk acts like the Abelian correction along its path; ``B`` anyons created by
    measurement are not tracked.  Logical failure is the homology class of the net chains.
    """
    lay, suite = patch.layout, patch.suite
    _, log = inject_errors(None, model, error_region(lay), rng, forced)
    frame = ErrorFrame()
    stats = {"B": 0, "X_len": 0, "heralds": 0, "C": 0, "F": 0, "fusions": 0,
             "residual_C": 0, "residual_F": 0, "A": 0, "Z_len": 0}
    sampled: dict = {}
    for kind, e, k in log.reveal():  # the backend plays the role of physics here
        frame.add(kind, e, k)
        _sample_marginals(_oracle_cached(patch, kind, e, k), rng, sampled)
    # stage 1
    bsyn = error_syndrome(lay, QUBIT, "plaquette", frame.x)
    rec = SyndromeRecord()
    for p in suite.B:
        rec.set("B", p, bsyn.get(p, 0))
    for v in suite.At:
        rec.set("At", v, sampled.get(("At", v), 0))
    stats["B"] = len(bsyn)
    # back-action: with X on qubit c, measuring an Ã whose leg is conditioned on c
    # projects onto a random power of Xq on that leg once the X is undone
    for c in sorted(frame.x):
        for vtx in herald_map(suite).get(c, ()):
            for leg in suite.At[vtx].legs:
                if qsite(c) in leg.cond:
                    frame.add("Xq", tuple(leg.sites[0][1:]), int(rng.integers(3)))
    if bsyn:
        flips, problem = decode_Bp(rec, lay, suite)
        stats["X_len"] = len(flips)
        stats["heralds"] = sum(len(v) for v in problem.heralds.values())
        for e in flips:
            frame.add("X", e, 1)
    if error_syndrome(lay, QUBIT, "plaquette", frame.x):
        return DecoderReport(False, None, stats), log
    # stage 2 on the Abelian qutrit syndromes
    for kind, chain, stab in (("C", "zq", "vertex"), ("F", "xq", "plaquette")):
        for _ in range(4):
            syn = error_syndrome(lay, QUTRIT, stab, getattr(frame, chain))
            stats[kind] += len(syn)
            if not syn:
                break
            g, bnd = charge_graph(lay, kind)
            for path in plan_pairs(MatchingProblem(kind, dict(syn)), g, bnd):
                stats["fusions"] += 1
                _frame_walk(frame, lay, g, path, kind, stab)
    # stage 3
    asyn = error_syndrome(lay, QUBIT, "vertex", frame.z)
    stats["A"] = len(asyn)
    if asyn:
        corr = abelian_decode({v: 1 for v in asyn}, lay, QUBIT, "vertex")
        stats["Z_len"] = len(corr)
        for e, k in corr.items():
            frame.add("Z", e, k)
    ok = not any((error_syndrome(lay, QUBIT, "vertex", frame.z),
                  error_syndrome(lay, QUTRIT, "vertex", frame.zq),
                  error_syndrome(lay, QUTRIT, "plaquette", frame.xq)))
    rep = DecoderReport(ok, frame_residual(frame, lay) if ok else None, stats)
    return rep, log


def _frame_walk(frame, lay, g, path, kind, stab):
    from .lattice import _error_syndrome_coeffs
    coeffs = _error_syndrome_coeffs(lay, QUTRIT, stab)
    chain = "zq" if kind == "C" else "xq"
    syn = error_syndrome(lay, QUTRIT, stab, getattr(frame, chain))
    for u, w in zip(path, path[1:]):
        e = g.edges[u, w]["edge"]
        need = syn.get(u, 0) % 3
        if not need:
            continue
        k = next(k for k in range(3) if (need + coeffs[e][u] * k) % 3 == 0)
        frame.add("Zq" if kind == "C" else "Xq", e, k)
        syn = error_syndrome(lay, QUTRIT, stab, getattr(frame, chain))


_ORACLE_CACHE: dict = {}


def _oracle_cached(patch: Patch, kind, e, k):
    key = (id(patch), kind, e, k)
    if key not in _ORACLE_CACHE:
        _ORACLE_CACHE[key] = syndrome_oracle(kind, e, patch.layout, patch.controls, k,
                                             patch.suite)
    return _ORACLE_CACHE[key]


# --- Monte Carlo -------------------------------------------------------------------------

@dataclass(frozen=True)
class MCConfig:
    model: ErrorModel = ErrorModel()
    seed: int = 0
    backend: str = "exact"
    rows: int = 2
    columns: int = 3
    qutrit_window: tuple = (1, 2)

    def __post_init__(self):
        if self.backend not in ("exact", "syndrome"):
            raise ValueError("backend must be 'exact' or 'syndrome'")


def trial_seeds(seed: int, trials: int) -> list:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(trials)]


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple:
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, mid - half), min(1.0, mid + half))


@dataclass
class MCResult:
    trials: int
    failures: int
    records: list

    @property
    def rate(self) -> float:
        return self.failures / self.trials

    @property
    def ci(self) -> tuple:
        return wilson_interval(self.failures, self.trials)

    @property
    def sigma(self) -> float:
        p = self.rate
        return math.sqrt(max(p * (1 - p), 1e-12) / self.trials)

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(r, sort_keys=True) for r in self.records) + "\n"


def mc_logical_error_rate(config: MCConfig, trials: int) -> MCResult:
    """Fraction of trials that end outside the ground space or with a residual logical."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    patch = prepared_patch(config.rows, config.columns, tuple(config.qutrit_window))
    run = run_trial_exact if config.backend == "exact" else run_trial_syndrome
    fails, records = 0, []
    for i, s in enumerate(trial_seeds(config.seed, trials)):
        rep, _ = run(patch, config.model, np.random.default_rng(s))
        failed = (not rep.success) or rep.residual_logical is not None
        fails += failed
        records.append({"trial": i, "seed": s, "backend": config.backend,
                        "rates": config.model.as_dict(), **rep.as_dict()})
    return MCResult(trials, fails, records)
