"""End-to-end controlled charge conjugation (and controlled swap for D4) by sliding a qubit
surface code through a qutrit (or Z2 x Z2) code.

The qubit code starts left of the second code, is extended column by column into and
past it, and is removed from the left after each extension.  Inside the overlap the
pair forms the gauged S3 (or D4) code; on the way out, each vertex readout decides
whether the symmetry has to be undone on the edges that vertex controlled.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .double import NODE_L, Controls, _base_sites, enrich_controls_for_extension
from .group import D4_SPEC, S3_SPEC, GroupSpec
from .hilbert import DEFAULT_BUDGET, Leg, Op, XQ, ZQ
from .lattice import (PAIR, QUBIT, QUTRIT, FeedforwardLog, LayeredLayout, ShrinkTracker,
                      base_dim, build_layout, encode, extend_right, logical_basis_ops,
                      shrink_left, symmetry_matrix)


# --- configuration ---------------------------------------------------------------------

@dataclass(frozen=True)
class ProtocolConfig:
    rows: int = 2
    qubit_window: tuple = (0, 1)
    qutrit_window: tuple = (2, 3)
    group: GroupSpec = S3_SPEC
    seed: int = 0
    budget: int = DEFAULT_BUDGET

    @property
    def base(self) -> str:
        return PAIR if self.group.base == "z2sq" else QUTRIT

    @property
    def width(self) -> int:
        return self.qubit_window[1] - self.qubit_window[0] + 1

    @property
    def columns(self) -> int:
        return self.qutrit_window[1] + self.width + 1

    def input_layout(self) -> LayeredLayout:
        return build_layout(self.rows, self.columns, self.qubit_window, self.qutrit_window,
                            self.base)

    def output_layout(self) -> LayeredLayout:
        c = self.columns
        return build_layout(self.rows, c, (c - self.width, c - 1), self.qutrit_window, self.base)

    def schedule(self) -> list:
        """``("extend", col)`` / ``("shrink", col)`` pairs moving the qubit code rightwards."""
        a, b = self.qubit_window
        steps = []
        for col in range(b + 1, self.columns):
            steps.append(("extend", col))
            steps.append(("shrink", a))
            a += 1
        return steps

    def validate(self) -> None:
        if self.qubit_window[1] >= self.qutrit_window[0]:
            raise ValueError("qubit code must start strictly left of the base code")
        lay = self.input_layout()
        # widest qubit window (one column more than at rest) plus one vertex ancilla
        peak_q = (self.width + 1) * self.rows + self.width * (self.rows - 1) + 1
        per_edge = 3 if self.base == QUTRIT else 4
        peak = 2 ** peak_q * per_edge ** len(lay.edges(lay.qutrit_window))
        if peak > self.budget:
            raise ValueError(f"peak register dimension {peak} exceeds budget {self.budget}")


# --- trace -------------------------------------------------------------------------------

@dataclass
class StepRecord:
    step: int
    op: str
    column: int
    x_outcomes: dict = field(default_factory=dict)
    z_outcomes: dict = field(default_factory=dict)
    feedforward: list = field(default_factory=list)
    closures: list = field(default_factory=list)
    xbar: bool = False
    symmetry_flips: list = field(default_factory=list)
    open_defects: list = field(default_factory=list)
    loop_class: str = ""

    def as_dict(self) -> dict:
        return {
            "step": self.step, "op": self.op, "column": self.column,
            "x_outcomes": {f"{k[0]},{k[1]}": v for k, v in sorted(self.x_outcomes.items())},
            "z_outcomes": {f"{e[0]}{e[1]},{e[2]}": z for e, z in sorted(self.z_outcomes.items())},
            "feedforward": self.feedforward, "closures": self.closures, "xbar": self.xbar,
            "symmetry_flips": [list(e) for e in self.symmetry_flips],
            "open_defects": list(self.open_defects), "loop_class": self.loop_class,
            "ec": "noop",
        }


@dataclass
class ProtocolTrace:
    steps: list = field(default_factory=list)
    tracker: ShrinkTracker | None = None

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(s.as_dict(), sort_keys=True) for s in self.steps)

    @property
    def n_xbar(self) -> int:
        return sum(1 for s in self.steps if s.xbar)


# --- running -----------------------------------------------------------------------------

def logical_target(config: ProtocolConfig, amps: np.ndarray) -> np.ndarray:
    """Ideal controlled-automorphism action on an ``(2, n_base)`` amplitude array."""
    out = np.array(amps, dtype=complex)
    n = out.shape[1]
    perm = [automorphism_index(config, k) for k in range(n)]
    out[1] = out[1][np.argsort(perm)]
    return out


def automorphism_index(config: ProtocolConfig, k: int) -> int:
    if config.base == QUTRIT:
        return (-k) % 3
    b0, b1 = k >> 1, k & 1
    return 2 * b1 + b0


def ideal_gate(config: ProtocolConfig) -> np.ndarray:
    n = base_dim(config.input_layout())
    m = np.zeros((2 * n, 2 * n))
    for j in range(2):
        for k in range(n):
            kk = automorphism_index(config, k) if j else k
            m[j * n + kk, j * n + k] = 1
    return m


def eject_column(state, layout, column, tracker, controls, rng, rec: StepRecord):
    """Read out the leftmost qubit column and undo the symmetry where the record says so."""
    log = FeedforwardLog()
    before = len(tracker.closures)
    nx_before = tracker.n_xbar
    new, log, removed = shrink_left(state, layout, QUBIT, column, tracker, rng, log)
    sym = symmetry_matrix(layout.base)
    for c in removed:
        edges = controls.edges_controlled_by(c)
        if not edges:
            continue
        flip = tracker.path_parity(c) == -1
        for e in edges:
            if flip:
                state.apply(Op((Leg(_base_sites(layout, e), sym),)))
                rec.symmetry_flips.append(e)
            controls.toggle(e, {c, NODE_L})
    rec.z_outcomes = dict(log.z_outcomes)
    rec.feedforward = log.operations
    rec.closures = [list(c) for c in tracker.closures[before:]]
    rec.xbar = tracker.n_xbar > nx_before
    rec.open_defects = list(tracker.open_defects)
    if tracker.open_defects:
        rec.loop_class = "open"
    elif rec.xbar:
        rec.loop_class = "non-contractible"
    else:
        rec.loop_class = "contractible"
    return new


def run_protocol(config: ProtocolConfig, amps, rng, check=None):
    """Run the full slide.  Returns ``(final_state, final_layout, trace, controls)``.

    ``check(state, layout, controls, step)`` is called after every step when given.
    """
    config.validate()
    layout = config.input_layout()
    state = encode(layout, np.asarray(amps), budget=config.budget)
    controls = Controls()
    tracker = ShrinkTracker(origin=config.qubit_window[0], rows=config.rows)
    trace = ProtocolTrace(tracker=tracker)
    for i, (kind, col) in enumerate(config.schedule()):
        rec = StepRecord(i, kind, col)
        if kind == "extend":
            enrich_controls_for_extension(layout, col, controls)
            layout, log = extend_right(state, layout, QUBIT, col, rng)
            rec.x_outcomes = dict(log.x_outcomes)
            rec.feedforward = log.operations
        else:
            layout = eject_column(state, layout, col, tracker, controls, rng, rec)
        trace.steps.append(rec)
        if check is not None:
            check(state, layout, controls, i)
    return state, layout, trace, controls


def logical_amplitudes(state, layout) -> np.ndarray:
    """Overlaps of ``state`` with every encoded logical basis state of ``layout``."""
    ground = encode(layout, _delta(layout, 0, 0))
    ops = logical_basis_ops(layout)
    n = base_dim(layout)
    out = np.zeros((2, n), dtype=complex)
    for (j, k), op in ops.items():
        basis = ground.copy().apply(op)
        out[j, k] = np.vdot(basis.vector(state.labels), state.vector())
    return out


def _delta(layout, j, k):
    a = np.zeros((2, base_dim(layout)))
    a[j, k] = 1
    return a


# --- verification ---------------------------------------------------------------------

@dataclass
class LogicalActionReport:
    fidelities: dict = field(default_factory=dict)
    heisenberg: dict = field(default_factory=dict)
    n_xbar: dict = field(default_factory=dict)

    @property
    def min_fidelity(self) -> float:
        return min(self.fidelities.values())

    def to_json(self) -> str:
        return json.dumps({"fidelities": self.fidelities, "heisenberg": self.heisenberg,
                           "n_xbar": self.n_xbar}, sort_keys=True)


def spanning_inputs(config: ProtocolConfig) -> dict:
    n = base_dim(config.input_layout())
    out = {}
    for j in range(2):
        for k in range(n):
            a = np.zeros((2, n), dtype=complex)
            a[j, k] = 1
            out[f"|{j},{k}>"] = a
    a = np.zeros((2, n), dtype=complex)
    a[0, 1] = a[1, 1] = 1 / np.sqrt(2)
    out["|+,1>"] = a
    a = np.zeros((2, n), dtype=complex)
    a[1, 1] = a[1, 2] = 1 / np.sqrt(2)
    out["|1,(1+2)>"] = a
    return out


def _logical_paulis(config: ProtocolConfig) -> dict:
    """Logical operators on the (qubit x base) space, keyed by name."""
    n = base_dim(config.input_layout())
    Zb = np.diag([1, -1]).astype(complex)
    Xb = np.array([[0, 1], [1, 0]], dtype=complex)
    if n == 3:
        zt, xt = ZQ, XQ
    else:
        zt = np.kron(Zb, np.eye(2))
        xt = np.kron(Xb, np.eye(2))
    return {"Zbar": np.kron(Zb, np.eye(n)), "Xbar": np.kron(Xb, np.eye(n)),
            "Ztbar": np.kron(np.eye(2), zt), "Xtbar": np.kron(np.eye(2), xt)}


def verify_logical_action(config: ProtocolConfig, inputs: dict | None = None,
                          heisenberg_samples: int = 2) -> LogicalActionReport:
    """Fidelity of the slid state with the ideal gate applied to the encoded input."""
    rng = np.random.default_rng(config.seed)
    inputs = inputs or spanning_inputs(config)
    out_layout = config.output_layout()
    rep = LogicalActionReport()
    for name, amps in inputs.items():
        final, layout, trace, _ = run_protocol(config, amps, rng)
        target = encode(out_layout, logical_target(config, amps))
        rep.fidelities[name] = final.fidelity(target)
        rep.n_xbar[name] = trace.n_xbar
    # Heisenberg picture: <P>_out = <U^+ P U>_in for random logical inputs
    U = ideal_gate(config)
    paulis = _logical_paulis(config)
    n = base_dim(out_layout)
    worst = {k: 0.0 for k in paulis}
    for _ in range(heisenberg_samples):
        vec = rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)
        vec /= np.linalg.norm(vec)
        amps = vec.reshape(2, n)
        final, layout, _, _ = run_protocol(config, amps, rng)
        out = logical_amplitudes(final, layout).reshape(-1)
        for k, P in paulis.items():
            lhs = np.vdot(out, P @ out)
            rhs = np.vdot(vec, U.conj().T @ P @ U @ vec)
            worst[k] = max(worst[k], abs(lhs - rhs))
    rep.heisenberg = worst
    return rep


def run_controlled_automorphism(config: ProtocolConfig, **kw) -> LogicalActionReport:
    return verify_logical_action(config, **kw)


def round_trip(config: ProtocolConfig, amps, rng) -> float:
    """Apply the slide twice (re-encoding the output on the input layout) and compare."""
    final, layout, _, _ = run_protocol(config, amps, rng)
    mid = logical_amplitudes(final, layout)
    final2, layout2, _, _ = run_protocol(config, mid, rng)
    back = logical_amplitudes(final2, layout2)
    a = np.asarray(amps, dtype=complex).reshape(-1)
    return abs(np.vdot(a / np.linalg.norm(a), back.reshape(-1))) ** 2


def d4_config(**kw) -> ProtocolConfig:
    return ProtocolConfig(group=D4_SPEC, **kw)
