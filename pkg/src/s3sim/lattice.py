"""Lattice geometry, Z2/Z3 surface-code stabilizers and logicals, and code extension/shrinkage.

Coordinates
-----------
* ``("h", x, y)``: horizontal edge from vertex ``(x, y)`` to ``(x + 1, y)``.
* ``("v", x, y)``: vertical edge from vertex ``(x, y)`` to ``(x, y + 1)``; ``y`` grows downward.
* Plaquette ``(x, y)`` has top ``h(x, y)``, bottom ``h(x, y+1)``, left ``v(x, y)`` and right
  ``v(x+1, y)``.

A layer occupying the column window ``[a, b]`` owns horizontal edges ``h(a..b, *)``,
vertex columns ``a+1..b`` and their vertical edges.  Horizontal edges dangle past the
outermost vertex columns, which gives rough left/right boundaries; the top and bottom
rows are smooth.  ``rows`` counts horizontal-edge rows, so a patch has ``rows - 1``
plaquette rows.

Site labels are ``(kind,) + edge`` with kind ``"q"`` (qubit), ``"t"`` (qutrit) or
``"b0"``/``"b1"`` (the two bits of a Z2 x Z2 edge).  Vertex ancillas are ``("a", x, y)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import networkx as nx
import numpy as np

from .hilbert import CQ, XQ, ZQ, Leg, Op, X, Z, controlled, cpow, gate, product

QUBIT, QUTRIT, PAIR = "qubit", "qutrit", "pair"
LAYER_DIM = {QUBIT: 2, QUTRIT: 3}

# Z3 sign pattern, recorded as data: leg name -> power of Xq (vertex) or Zq (plaquette)
Z3_VERTEX_SIGNS = {"left": 1, "top": 1, "right": -1, "bottom": -1}
Z3_PLAQUETTE_SIGNS = {"left": -1, "top": 1, "right": 1, "bottom": -1}

SWAP = np.eye(4, dtype=complex)[[0, 2, 1, 3]]


def h(x, y):
    return ("h", x, y)


def v(x, y):
    return ("v", x, y)


def qsite(e):
    return ("q",) + tuple(e)


def tsite(e):
    return ("t",) + tuple(e)


def bsites(e):
    return ("b0",) + tuple(e), ("b1",) + tuple(e)


def vsite(x, y):
    return ("a", x, y)


def layer_sites(layer: str, e) -> tuple:
    if layer == QUBIT:
        return (qsite(e),)
    if layer == QUTRIT:
        return (tsite(e),)
    if layer == PAIR:
        return bsites(e)
    raise ValueError(f"unknown layer {layer!r}")


# --- layout ------------------------------------------------------------------------

@dataclass(frozen=True)
class LayeredLayout:
    rows: int
    columns: int
    qubit_window: tuple | None
    qutrit_window: tuple | None
    base: str = QUTRIT  # layer kind of the second code: qutrit (S3) or pair (D4)

    def __post_init__(self):
        if self.rows < 1 or self.columns < 1:
            raise ValueError("rows and columns must be positive")
        wins = [w for w in (self.qubit_window, self.qutrit_window) if w is not None]
        if not wins:
            raise ValueError("layout has no active window")
        for a, b in wins:
            if not 0 <= a <= b < self.columns:
                raise ValueError(f"window {(a, b)} outside [0, {self.columns})")
        if self.base not in (QUTRIT, PAIR):
            raise ValueError("base layer must be qutrit or pair")

    # windows ----------------------------------------------------------------
    def window(self, layer: str):
        return self.qubit_window if layer == QUBIT else self.qutrit_window

    @property
    def overlap(self):
        if self.qubit_window is None or self.qutrit_window is None:
            return None
        a = max(self.qubit_window[0], self.qutrit_window[0])
        b = min(self.qubit_window[1], self.qutrit_window[1])
        return (a, b) if a <= b else None

    def with_window(self, layer: str, win) -> "LayeredLayout":
        if layer == QUBIT:
            return replace(self, qubit_window=win)
        return replace(self, qutrit_window=win)

    # geometry per window -------------------------------------------------------
    def edges(self, win) -> list:
        if win is None:
            return []
        a, b = win
        out = [h(x, y) for x in range(a, b + 1) for y in range(self.rows)]
        out += [v(x, y) for x in range(a + 1, b + 1) for y in range(self.rows - 1)]
        return out

    def vertices(self, win) -> list:
        if win is None:
            return []
        a, b = win
        return [(x, y) for x in range(a + 1, b + 1) for y in range(self.rows)]

    def plaquettes(self, win) -> list:
        if win is None:
            return []
        a, b = win
        return [(x, y) for x in range(a, b + 1) for y in range(self.rows - 1)]

    def vertex_legs(self, vtx, win) -> dict:
        """Incident edges of a vertex inside ``win``, keyed by side."""
        x, y = vtx
        legs = {"left": h(x - 1, y), "right": h(x, y)}
        if y >= 1:
            legs["top"] = v(x, y - 1)
        if y <= self.rows - 2:
            legs["bottom"] = v(x, y)
        present = set(self.edges(win))
        return {k: e for k, e in legs.items() if e in present}

    def plaquette_legs(self, plaq, win) -> dict:
        x, y = plaq
        legs = {"left": v(x, y), "top": h(x, y), "right": v(x + 1, y), "bottom": h(x, y + 1)}
        present = set(self.edges(win))
        return {k: e for k, e in legs.items() if e in present}

    def edge_endpoints(self, e) -> tuple:
        kind, x, y = e
        return ((x, y), (x + 1, y)) if kind == "h" else ((x, y), (x, y + 1))

    def controller(self, e) -> tuple:
        """Vertex whose qubit controls the symmetry action on edge ``e`` during enrichment."""
        _, x, y = e
        return (x, y)

    # sizes ------------------------------------------------------------------------
    def register_dims(self) -> list:
        dims = [2] * len(self.edges(self.qubit_window))
        per = [3] if self.base == QUTRIT else [2, 2]
        for _ in self.edges(self.qutrit_window):
            dims += per
        return dims

    def total_dimension(self) -> int:
        return int(np.prod(self.register_dims(), dtype=object))

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows, "columns": self.columns,
                           "qubit_window": self.qubit_window,
                           "qutrit_window": self.qutrit_window, "base": self.base})

    @classmethod
    def from_json(cls, text: str) -> "LayeredLayout":
        d = json.loads(text)
        tup = lambda w: None if w is None else tuple(w)
        return cls(d["rows"], d["columns"], tup(d["qubit_window"]), tup(d["qutrit_window"]),
                   d.get("base", QUTRIT))


def build_layout(rows: int, columns: int, qubit_window=None, qutrit_window=None,
                 base: str = QUTRIT) -> LayeredLayout:
    tup = lambda w: None if w is None else tuple(w)
    return LayeredLayout(rows, columns, tup(qubit_window), tup(qutrit_window), base)


# --- stabilizers --------------------------------------------------------------------

@dataclass(frozen=True)
class StabilizerSpec:
    """One stabilizer generator.  ``terms`` lists ``(site, label, power)``."""

    kind: str
    location: tuple
    terms: tuple
    truncated: bool
    order: int

    def op(self) -> Op:
        mats = {"X": X, "Z": Z, "Xq": XQ, "Zq": ZQ}
        ops = [cpow(site, mats[label], power=p) for site, label, p in self.terms]
        return product(ops, order=self.order, name=f"{self.kind}{self.location}")


def stabilizer_set(layout: LayeredLayout, layer: str) -> list[StabilizerSpec]:
    win = layout.window(layer)
    if win is None:
        raise ValueError(f"{layer} window is empty")
    kind = QUBIT if layer == QUBIT else layout.base
    out = []
    for vtx in layout.vertices(win):
        legs = layout.vertex_legs(vtx, win)
        trunc = len(legs) < 4
        if kind == QUTRIT:
            terms = tuple((tsite(e), "Xq", Z3_VERTEX_SIGNS[k]) for k, e in legs.items())
            out.append(StabilizerSpec("qutrit-vertex", vtx, terms, trunc, 3))
        else:
            for site_of in _bit_site_fns(kind):
                terms = tuple((site_of(e), "X", 1) for e in legs.values())
                out.append(StabilizerSpec(f"{_kind_prefix(kind)}-vertex", vtx, terms, trunc, 2))
    for plaq in layout.plaquettes(win):
        legs = layout.plaquette_legs(plaq, win)
        trunc = len(legs) < 4
        if kind == QUTRIT:
            terms = tuple((tsite(e), "Zq", Z3_PLAQUETTE_SIGNS[k]) for k, e in legs.items())
            out.append(StabilizerSpec("qutrit-plaquette", plaq, terms, trunc, 3))
        else:
            for site_of in _bit_site_fns(kind):
                terms = tuple((site_of(e), "Z", 1) for e in legs.values())
                out.append(StabilizerSpec(f"{_kind_prefix(kind)}-plaquette", plaq, terms, trunc, 2))
    return out


def _bit_site_fns(kind):
    if kind == QUBIT:
        return (qsite,)
    return (lambda e: bsites(e)[0], lambda e: bsites(e)[1])


def _kind_prefix(kind):
    return "qubit" if kind == QUBIT else "pair"


@dataclass(frozen=True)
class LogicalOperatorSpec:
    path: tuple
    label: str
    power: int = 1

    def op(self, layer: str, bit: int | None = None) -> Op:
        mats = {"X": X, "Z": Z, "Xq": XQ, "Zq": ZQ}
        m = mats[self.label]
        sites = []
        for e in self.path:
            if layer == PAIR:
                sites.append(bsites(e)[bit or 0])
            else:
                sites.append(layer_sites(layer, e)[0])
        return product([cpow(s, m, power=self.power) for s in sites], name=self.label + "bar")


def logical_operators(layout: LayeredLayout, layer: str, column: int | None = None):
    """Return ``(Z-type, X-type)`` logical specs: a row-0 string and a column of horizontal edges."""
    win = layout.window(layer)
    if win is None:
        raise ValueError(f"{layer} window is empty")
    a, b = win
    k = a if column is None else column
    if not a <= k <= b:
        raise ValueError("logical column outside window")
    zpath = tuple(h(x, 0) for x in range(a, b + 1))
    xpath = tuple(h(k, y) for y in range(layout.rows))
    if layer == QUBIT or layout.base == PAIR:
        return LogicalOperatorSpec(zpath, "Z"), LogicalOperatorSpec(xpath, "X")
    return LogicalOperatorSpec(zpath, "Zq"), LogicalOperatorSpec(xpath, "Xq")


# --- extension ----------------------------------------------------------------------

def symmetry_matrix(base: str) -> np.ndarray:
    """Charge conjugation on a qutrit, or the bit swap on a Z2 x Z2 edge."""
    return CQ if base == QUTRIT else SWAP


def symmetry_gate(layout: LayeredLayout, e) -> Op:
    if layout.base == QUTRIT:
        return gate(tsite(e), CQ)
    return Op((Leg(bsites(e), SWAP),))


def controlled_symmetry(layout: LayeredLayout, ctrl, e) -> Op:
    if layout.base == QUTRIT:
        return controlled(ctrl, tsite(e), CQ)
    return Op((Leg(bsites(e), np.eye(4, dtype=complex), SWAP, (ctrl,)),))


@dataclass
class FeedforwardLog:
    x_outcomes: dict = field(default_factory=dict)  # vertex -> 0/1
    z_outcomes: dict = field(default_factory=dict)  # edge -> +1/-1
    operations: list = field(default_factory=list)  # (label, sites)

    def add(self, label, sites):
        self.operations.append((label, [list(s) if isinstance(s, tuple) else s for s in sites]))


def extend_right(state, layout: LayeredLayout, layer: str, column: int, rng,
                 log: FeedforwardLog | None = None, enrich: bool = True):
    """Grow the qubit code by one column on its right rough boundary.

    Each new vertex ancilla starts in |+>, the new edges in |0>.  When the column lies
    in the qutrit window, the ancilla first controls the symmetry action on the second
    code's edges it owns (enrichment), then the CX entangler runs and the ancilla is
    read out in the X basis.  A -1 outcome is fixed by Z on the edge to its right.
    Returns ``(new_layout, log)``.
    """
    if layer != QUBIT:
        raise ValueError("only the qubit code is slid across the lattice")
    a, b = layout.qubit_window
    if column != b + 1 or column >= layout.columns:
        raise ValueError("column must be adjacent to the right edge of the qubit window")
    log = log or FeedforwardLog()
    new = layout.with_window(QUBIT, (a, column))
    new_edges = [e for e in new.edges(new.qubit_window) if e[1] == column]
    for e in new_edges:
        state.add_site(qsite(e), 2, 0)
    twin = set(layout.edges(layout.qutrit_window))
    for y in range(layout.rows):
        anc = vsite(column, y)
        state.add_site(anc, 2, "+")
        if enrich:
            for e in (h(column, y), v(column, y)):
                if e in twin:
                    state.apply(controlled_symmetry(layout, anc, e))
        for e in new.vertex_legs((column, y), new.qubit_window).values():
            state.apply(controlled(anc, qsite(e), X))
        out = state.measure_and_remove(anc, rng, basis="X")
        log.x_outcomes[(column, y)] = out
        if out:
            state.apply(gate(qsite(h(column, y)), Z))
            log.add("Z", [qsite(h(column, y))])
    return new, log


# --- shrinkage ----------------------------------------------------------------------

@dataclass
class ShrinkTracker:
    """Classical record kept while the qubit code is removed column by column."""

    origin: int  # left edge of the qubit window when tracking started
    rows: int
    measured: dict = field(default_factory=dict)  # edge -> raw outcome (+1/-1)
    flips: dict = field(default_factory=dict)  # edge -> number of X flips applied
    n_xbar: int = 0
    open_defects: tuple = ()
    closures: list = field(default_factory=list)  # (column, y_top, y_bottom or None)
    xbar_columns: list = field(default_factory=list)

    def unflipped(self, e) -> int:
        return self.measured[e] * (-1) ** self.flips.get(e, 0)

    def row0_product(self) -> int:
        p = 1
        for e, z in self.measured.items():
            if e[0] == "h" and e[2] == 0:
                p *= z
        return p

    def path_parity(self, vtx) -> int:
        """Product of unflipped outcomes along row 0 to ``vtx``'s column, then down to it."""
        cx, cy = vtx
        p = 1
        for x in range(self.origin, cx):
            p *= self.unflipped(h(x, 0))
        for y in range(cy):
            p *= self.unflipped(v(cx, y))
        return p

    def minus_one_edges(self) -> list:
        return sorted(e for e in self.measured if self.unflipped(e) == -1)


def shrink_left(state, layout: LayeredLayout, layer: str, column: int, tracker: ShrinkTracker,
                rng, log: FeedforwardLog | None = None):
    """Remove the leftmost qubit column ``column`` by measuring its edges in the Z basis.

    Boundary m anyons that appear on the new left edge are paired top to bottom with X
    strings (an odd one is sent to the bottom boundary) as long as that edge holds no
    second-code edges.  Once no boundary defects remain, X-bar is applied on the new
    frontier column whenever the measured row-0 record says the logical Z was flipped.
    Returns ``(new_layout, log, frontier_vertices)`` where ``frontier_vertices`` are the
    removed vertices, whose controlled edges the caller may still need to resolve.
    """
    if layer != QUBIT:
        raise ValueError("only the qubit code is slid across the lattice")
    a, b = layout.qubit_window
    if column != a or a == b:
        raise ValueError("column must be the leftmost column of a window wider than one")
    log = log or FeedforwardLog()
    removed = [h(a, y) for y in range(layout.rows)] + [v(a + 1, y) for y in range(layout.rows - 1)]
    for e in removed:
        bit = state.measure_and_remove(qsite(e), rng)
        z = -1 if bit else 1
        tracker.measured[e] = z
        log.z_outcomes[e] = z
    new = layout.with_window(QUBIT, (a + 1, b))
    frontier = a + 1
    defects = [y for y in range(layout.rows - 1) if tracker.measured[v(frontier, y)] == -1]
    twin = layout.qutrit_window
    closable = twin is None or not twin[0] <= frontier <= twin[1]
    if defects and closable:
        _close_defects(state, defects, frontier, layout.rows, tracker, log)
        defects = []
    tracker.open_defects = tuple(defects)
    if not defects:
        if tracker.row0_product() * (-1) ** tracker.n_xbar == -1:
            for y in range(layout.rows):
                e = h(frontier, y)
                state.apply(gate(qsite(e), X))
                tracker.flips[e] = tracker.flips.get(e, 0) + 1
            tracker.n_xbar += 1
            tracker.xbar_columns.append(frontier)
            log.add("Xbar", [qsite(h(frontier, y)) for y in range(layout.rows)])
    return new, log, [(a + 1, y) for y in range(layout.rows)]


def _close_defects(state, defects, col, rows, tracker, log):
    pending = list(defects)
    while pending:
        y1 = pending.pop(0)
        if pending:
            y2 = pending.pop(0)
            ys = range(y1 + 1, y2 + 1)
            tracker.closures.append((col, y1, y2))
        else:
            ys = range(y1 + 1, rows)
            tracker.closures.append((col, y1, None))
        sites = []
        for y in ys:
            e = h(col, y)
            state.apply(gate(qsite(e), X))
            tracker.flips[e] = tracker.flips.get(e, 0) + 1
            sites.append(qsite(e))
        log.add("X", sites)


# --- Abelian decoding ---------------------------------------------------------------

def _primal_graph(layout, win):
    g = nx.Graph()
    a, b = win
    for e in layout.edges(win):
        u, w = layout.edge_endpoints(e)
        if e[0] == "h" and e[1] == a:
            u = "L"
        if e[0] == "h" and e[1] == b:
            w = "R"
        g.add_edge(u, w, edge=e)
    return g


def _dual_graph(layout, win):
    g = nx.Graph()
    a, b = win
    for e in layout.edges(win):
        kind, x, y = e
        if kind == "h":
            u = (x, y - 1) if y >= 1 else "T"
            w = (x, y) if y <= layout.rows - 2 else "B"
        else:
            u, w = (x - 1, y), (x, y)
        g.add_edge(u, w, edge=e)
    return g


def _error_syndrome_coeffs(layout, layer, stab_kind):
    """Map edge -> {location: coefficient}: syndrome exponent per unit error power."""
    win = layout.window(layer)
    out: dict = {}
    if stab_kind == "vertex":
        for vtx in layout.vertices(win):
            for side, e in layout.vertex_legs(vtx, win).items():
                s = Z3_VERTEX_SIGNS[side] if layer == QUTRIT else 1
                out.setdefault(e, {})[vtx] = -s  # Xq^s Zq^k = w^(-sk) Zq^k Xq^s
    else:
        for p in layout.plaquettes(win):
            for side, e in layout.plaquette_legs(p, win).items():
                s = Z3_PLAQUETTE_SIGNS[side] if layer == QUTRIT else 1
                out.setdefault(e, {})[p] = s  # Zq^s Xq^k = w^(sk) Xq^k Zq^s
    return out


def error_syndrome(layout, layer, stab_kind, errors: dict) -> dict:
    """Syndrome exponents produced by ``errors`` (edge -> power) on the given stabilizer kind."""
    mod = 3 if layer == QUTRIT else 2
    coeffs = _error_syndrome_coeffs(layout, layer, stab_kind)
    syn: dict = {}
    for e, k in errors.items():
        for loc, c in coeffs.get(e, {}).items():
            syn[loc] = (syn.get(loc, 0) + c * k) % mod
    return {loc: s for loc, s in syn.items() if s}


class UnmatchedSyndrome(ValueError):
    pass


def abelian_decode(syndromes: dict, layout: LayeredLayout, layer: str, stab_kind: str) -> dict:
    """Minimum-weight pairing of Abelian defects.

    ``syndromes`` maps vertex or plaquette location -> nonzero exponent.  Vertex defects
    pair through the primal lattice or end on rough boundaries; plaquette defects pair
    through the dual lattice or end on smooth boundaries.  Returns the correction as
    edge -> power of Z/Zq (vertex case) or X/Xq (plaquette case).
    """
    if not syndromes:
        return {}
    mod = 3 if layer == QUTRIT else 2
    win = layout.window(layer)
    g = _primal_graph(layout, win) if stab_kind == "vertex" else _dual_graph(layout, win)
    bnodes = ("L", "R") if stab_kind == "vertex" else ("T", "B")
    for loc in syndromes:
        if loc not in g:
            raise UnmatchedSyndrome(f"syndrome at {loc} is not a {stab_kind} of the layer")
    dist = {loc: nx.single_source_shortest_path_length(g, loc) for loc in syndromes}
    locs = sorted(syndromes)
    m = nx.Graph()
    big = 10 * (g.number_of_nodes() + 1)
    for i, u in enumerate(locs):
        bd = min(dist[u].get(bn, big) for bn in bnodes)
        m.add_edge(("d", u), ("b", u), weight=big - bd)
        for w in locs[i + 1:]:
            if (syndromes[u] + syndromes[w]) % mod == 0:
                m.add_edge(("d", u), ("d", w), weight=big - dist[u][w])
            m.add_edge(("b", u), ("b", w), weight=big)
    matching = nx.max_weight_matching(m, maxcardinality=True)
    coeffs = _error_syndrome_coeffs(layout, layer, stab_kind)
    correction: dict = {}
    remaining = dict(syndromes)
    for p, q in matching:
        if p[0] == "b" and q[0] == "b":
            continue
        if p[0] == "b":
            p, q = q, p
        u = p[1]
        if q[0] == "d":
            path = nx.shortest_path(g, u, q[1])
        else:
            bn = min(bnodes, key=lambda n: dist[u].get(n, big))
            path = nx.shortest_path(g, u, bn)
        _cancel_along(path, g, coeffs, remaining, correction, mod)
    if any(remaining.get(loc, 0) % mod for loc in syndromes):
        raise UnmatchedSyndrome("correction left syndromes behind")
    return {e: k for e, k in correction.items() if k % mod}


def _cancel_along(path, g, coeffs, syn, correction, mod):
    for u, w in zip(path, path[1:]):
        e = g.edges[u, w]["edge"]
        cu = coeffs[e][u]
        need = syn.get(u, 0) % mod
        if not need:
            break
        # choose k with need + cu*k = 0 (mod)
        k = next(k for k in range(mod) if (need + cu * k) % mod == 0)
        correction[e] = (correction.get(e, 0) + k) % mod
        for loc, c in coeffs[e].items():
            syn[loc] = (syn.get(loc, 0) + c * k) % mod


def correction_op(layout, layer, stab_kind, correction: dict) -> Op:
    if layer == QUTRIT:
        m = ZQ if stab_kind == "vertex" else XQ
    else:
        m = Z if stab_kind == "vertex" else X
    site = tsite if layer == QUTRIT else qsite
    return product([cpow(site(e), m, power=k) for e, k in sorted(correction.items())])


# --- encoding -----------------------------------------------------------------------

def register_sites(layout: LayeredLayout) -> list:
    """``(label, dim)`` for every site of the Abelian codes in ``layout``."""
    sites = [(qsite(e), 2) for e in layout.edges(layout.qubit_window)]
    for e in layout.edges(layout.qutrit_window):
        if layout.base == QUTRIT:
            sites.append((tsite(e), 3))
        else:
            sites += [(s, 2) for s in bsites(e)]
    return sites


def base_dim(layout: LayeredLayout) -> int:
    return 3 if layout.base == QUTRIT else 4


def logical_basis_ops(layout: LayeredLayout):
    """Ops mapping the logical |0,0> to |j,k> for every pair ``(j, k)``.

    ``k`` indexes the qutrit, or the two base bits as ``2*b0 + b1`` for a Z2 x Z2 code.
    """
    out = {}
    nq = 2 if layout.qubit_window else 1
    nb = base_dim(layout) if layout.qutrit_window else 1
    xq = logical_operators(layout, QUBIT)[1].op(QUBIT) if layout.qubit_window else Op()
    if layout.qutrit_window:
        xt = logical_operators(layout, layout.base)[1]
    for j in range(nq):
        for k in range(nb):
            ops = [xq] * j
            if layout.qutrit_window:
                if layout.base == QUTRIT:
                    ops += [xt.op(QUTRIT)] * k
                else:
                    ops += [xt.op(PAIR, 0)] * (k >> 1) + [xt.op(PAIR, 1)] * (k & 1)
            out[(j, k)] = product(ops)
    return out


def abelian_ground_state(layout: LayeredLayout, budget=None):
    """Logical |0,0> of the disjoint (non-overlapping) codes in ``layout``."""
    from .hilbert import DEFAULT_BUDGET, PureState
    if layout.overlap is not None:
        raise ValueError("overlapping windows need the S3 suite to encode")
    st = PureState.product([(l, d, 0) for l, d in register_sites(layout)],
                           budget=budget or DEFAULT_BUDGET)
    layers = [QUBIT] if layout.qubit_window else []
    if layout.qutrit_window:
        layers.append(layout.base)
    for lay in layers:
        for s in stabilizer_set(layout, lay):
            st.project(s.op(), 0)
    return st


def encode(layout: LayeredLayout, amps: np.ndarray, budget=None):
    """Encode a logical state given as an ``(n_qubit, n_base)`` amplitude array."""
    from .hilbert import PureState
    ground = abelian_ground_state(layout, budget)
    amps = np.asarray(amps, dtype=complex)
    psi = np.zeros_like(ground.psi)
    for (j, k), op in logical_basis_ops(layout).items():
        if abs(amps[j, k]) > 0:
            tmp = ground.copy().apply(op)
            psi = psi + amps[j, k] * tmp.psi
    st = PureState(ground.budget)
    st.labels = list(ground.labels)
    st.psi = psi
    st.normalize()
    return st
