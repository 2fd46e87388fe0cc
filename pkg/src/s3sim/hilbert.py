"""Dense pure-state simulation over a register of qubit and qutrit sites.

The amplitude tensor keeps one axis per site.  Sites are addressed by hashable labels
and can be added or removed while a simulation runs, which is how ancillas and the
sliding code windows are handled.

Operators are products of :class:`Leg` objects.  A leg acts on one or more target
sites with a matrix that may depend on the parity of a set of qubit ``Z`` values,
which covers plain gates, controlled gates and the conditioned powers like
``Zq ** Z1`` used throughout the S3 code.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

DEFAULT_BUDGET = 2 ** 26
WEIGHT_FLOOR = 1e-12

OMEGA = np.exp(2j * np.pi / 3)

# qubit Paulis
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
H2 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

# qutrit generalized Paulis: Zq|n> = w^n|n>, Xq|n> = |n+1>
I3 = np.eye(3, dtype=complex)
ZQ = np.diag([1, OMEGA, OMEGA ** 2])
XQ = np.roll(np.eye(3, dtype=complex), 1, axis=0)
CQ = np.eye(3, dtype=complex)[[0, 2, 1]]  # charge conjugation |n> -> |-n>
H3 = np.array([[OMEGA ** (j * k) for k in range(3)] for j in range(3)]) / np.sqrt(3)


class BudgetExceeded(RuntimeError):
    pass


class NormUnderflow(RuntimeError):
    pass


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def mpow(m: np.ndarray, k: int) -> np.ndarray:
    """Integer matrix power; negative powers use the adjoint (operands are unitary)."""
    if k < 0:
        return np.linalg.matrix_power(dagger(m), -k)
    return np.linalg.matrix_power(m, k)


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    return np.allclose(m @ dagger(m), np.eye(m.shape[0]), atol=tol)


# --- operators -----------------------------------------------------------------------

@dataclass(frozen=True)
class Leg:
    """``on_plus`` where the product of ``Z`` over ``cond`` is +1, ``on_minus`` otherwise."""

    sites: tuple
    on_plus: np.ndarray
    on_minus: np.ndarray | None = None
    cond: tuple = ()

    def __post_init__(self):
        if set(self.sites) & set(self.cond):
            raise ValueError("a leg cannot be conditioned on its own target")
        if self.on_minus is None and self.cond:
            raise ValueError("conditioned leg needs an on_minus matrix")

    def dagger(self) -> "Leg":
        minus = None if self.on_minus is None else dagger(self.on_minus)
        return Leg(self.sites, dagger(self.on_plus), minus, self.cond)

    def is_unitary(self, tol: float = 1e-12) -> bool:
        return is_unitary(self.on_plus, tol) and (
            self.on_minus is None or is_unitary(self.on_minus, tol))


@dataclass(frozen=True)
class Op:
    """Ordered product of legs; ``legs[0]`` acts first."""

    legs: tuple = ()
    order: int = 0  # finite order when used as an observable, 0 if unspecified
    name: str = ""

    def then(self, other: "Op") -> "Op":
        return Op(self.legs + other.legs, name=f"{other.name}*{self.name}")

    def __matmul__(self, other: "Op") -> "Op":
        # operator product: self @ other acts with other first
        return other.then(self)

    def dagger(self) -> "Op":
        return Op(tuple(l.dagger() for l in reversed(self.legs)), self.order, self.name + "^+")

    def power(self, k: int) -> "Op":
        base = self if k >= 0 else self.dagger()
        return Op(base.legs * abs(k), self.order, f"{self.name}^{k}")

    def support(self) -> set:
        s = set()
        for leg in self.legs:
            s.update(leg.sites)
            s.update(leg.cond)
        return s

    def with_order(self, k: int, name: str | None = None) -> "Op":
        return Op(self.legs, k, self.name if name is None else name)


def gate(site, m: np.ndarray, name: str = "") -> Op:
    sites = tuple(site) if isinstance(site, list) else (site,)
    return Op((Leg(sites, np.asarray(m, dtype=complex)),), name=name)


def dense(sites: Sequence, m: np.ndarray, name: str = "") -> Op:
    return Op((Leg(tuple(sites), np.asarray(m, dtype=complex)),), name=name)


def cpow(site, w: np.ndarray, cond: Sequence = (), power: int = 1, name: str = "") -> Op:
    """``w ** (power * prod Z_cond)``; with empty ``cond`` this is just ``w ** power``."""
    cond = tuple(cond)
    plus = mpow(w, power)
    if not cond:
        return Op((Leg((site,), plus),), name=name)
    return Op((Leg((site,), plus, mpow(w, -power), cond),), name=name)


def controlled(ctrl, site, u: np.ndarray, name: str = "") -> Op:
    """Apply ``u`` to ``site`` when qubit ``ctrl`` is |1>."""
    d = u.shape[0]
    return Op((Leg((site,), np.eye(d, dtype=complex), np.asarray(u, dtype=complex), (ctrl,)),),
              name=name)


def product(ops: Iterable[Op], order: int = 0, name: str = "") -> Op:
    legs: tuple = ()
    for op in ops:
        legs += op.legs
    return Op(legs, order, name)


# --- randomness -----------------------------------------------------------------------

def sample_index(rng, probs: Sequence[float]) -> int:
    """Draw an outcome index from ``probs``.

    ``rng`` is a numpy Generator or any object with a ``choose(probs)`` method, which
    lets tests script or enumerate measurement branches.
    """
    if hasattr(rng, "choose"):
        return rng.choose(list(probs))
    cum = np.cumsum(probs)
    u = rng.random() * cum[-1]
    return int(min(np.searchsorted(cum, u, side="right"), len(probs) - 1))


class ForcedOutcomes:
    """Chooser that replays a fixed list of outcome indices, then defers to ``fallback``."""

    def __init__(self, outcomes: Sequence[int], fallback=None):
        self.outcomes = list(outcomes)
        self.fallback = fallback
        self.pos = 0

    def choose(self, probs):
        if self.pos < len(self.outcomes):
            k = self.outcomes[self.pos]
            self.pos += 1
            if probs[k] <= 0:
                raise NormUnderflow(f"forced outcome {k} has zero weight")
            return k
        if self.fallback is None:
            raise IndexError("ran out of forced outcomes")
        return sample_index(self.fallback, probs)


class _BranchChooser:
    def __init__(self, prefix):
        self.prefix = list(prefix)
        self.trail = []  # (chosen index, probs) per decision
        self.prob = 1.0

    def choose(self, probs):
        i = len(self.trail)
        k = self.prefix[i] if i < len(self.prefix) else next(
            j for j, p in enumerate(probs) if p > 0)
        self.trail.append((k, list(probs)))
        self.prob *= probs[k]
        return k


def enumerate_branches(run, max_branches: int = 100000):
    """Depth-first enumeration of every nonzero-probability measurement branch.

    ``run(chooser)`` must be deterministic given the chooser's answers.  Yields
    ``(probability, result, outcome_indices)`` for each leaf.
    """
    stack = [[]]
    count = 0
    while stack:
        prefix = stack.pop()
        ch = _BranchChooser(prefix)
        result = run(ch)
        count += 1
        if count > max_branches:
            raise RuntimeError("branch enumeration exceeded limit")
        for depth in range(len(prefix), len(ch.trail)):
            k, probs = ch.trail[depth]
            taken = [c for c, _ in ch.trail[:depth]]
            for j in range(k + 1, len(probs)):
                if probs[j] > 0:
                    stack.append(taken + [j])
        yield ch.prob, result, [c for c, _ in ch.trail]


# --- state ---------------------------------------------------------------------------

PLUS_TAG = "+"


def _single_site_vector(dim: int, tag) -> np.ndarray:
    if isinstance(tag, np.ndarray):
        v = tag.astype(complex)
    elif tag == PLUS_TAG:
        v = np.ones(dim, dtype=complex) / np.sqrt(dim)
    else:
        v = np.zeros(dim, dtype=complex)
        v[int(tag)] = 1
    if v.shape != (dim,):
        raise ValueError("site vector has wrong dimension")
    return v / np.linalg.norm(v)


class PureState:
    """Normalized amplitude tensor with labelled site axes."""

    def __init__(self, budget: int = DEFAULT_BUDGET):
        self.labels: list = []
        self.psi = np.ones((), dtype=complex)
        self.budget = budget

    # construction -------------------------------------------------------------
    @classmethod
    def product(cls, sites: Sequence[tuple], budget: int = DEFAULT_BUDGET) -> "PureState":
        """``sites`` is a sequence of ``(label, dim, tag)``; tag is a basis index, '+' or a vector."""
        total = int(np.prod([d for _, d, _ in sites], dtype=object)) if sites else 1
        if total > budget:
            raise BudgetExceeded(f"register dimension {total} exceeds budget {budget}")
        st = cls(budget)
        for label, dim, tag in sites:
            st.add_site(label, dim, tag)
        return st

    def copy(self) -> "PureState":
        st = PureState(self.budget)
        st.labels = list(self.labels)
        st.psi = self.psi.copy()
        return st

    @property
    def dims(self) -> tuple:
        return self.psi.shape

    @property
    def size(self) -> int:
        return self.psi.size

    def dim_of(self, label) -> int:
        return self.psi.shape[self.axis(label)]

    def axis(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"site {label!r} not in register") from None

    def has(self, label) -> bool:
        return label in self.labels

    def add_site(self, label: Hashable, dim: int, tag=0) -> None:
        if label in self.labels:
            raise ValueError(f"site {label!r} already present")
        if self.psi.size * dim > self.budget:
            raise BudgetExceeded(
                f"register dimension {self.psi.size * dim} exceeds budget {self.budget}")
        v = _single_site_vector(dim, tag)
        self.psi = np.multiply.outer(self.psi, v)
        self.labels.append(label)

    def remove_site(self, label, value: int) -> float:
        """Project ``label`` onto basis state ``value``, drop the axis and renormalize."""
        ax = self.axis(label)
        sub = np.take(self.psi, value, axis=ax)
        w = float(np.vdot(sub, sub).real)
        if w < WEIGHT_FLOOR:
            raise NormUnderflow(f"site {label!r} has no weight on |{value}>")
        self.psi = sub / np.sqrt(w)
        del self.labels[ax]
        return w

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.psi, self.psi).real))

    def normalize(self) -> float:
        n = self.norm()
        if n ** 2 < WEIGHT_FLOOR:
            raise NormUnderflow("state has vanishing norm")
        self.psi /= n
        return n

    # gates --------------------------------------------------------------------
    def _apply_leg(self, psi: np.ndarray, leg: Leg) -> np.ndarray:
        axes = [self.axis(s) for s in leg.sites]
        if not leg.cond:
            return _apply_matrix(psi, axes, leg.on_plus)
        caxes = [self.axis(c) for c in leg.cond]
        for c, ax in zip(leg.cond, caxes):
            if psi.shape[ax] != 2:
                raise ValueError(f"condition site {c!r} is not a qubit")
        out = psi.copy()
        sorted_c = sorted(caxes)
        for bits in itertools.product((0, 1), repeat=len(caxes)):
            idx = [slice(None)] * psi.ndim
            for ax, b in zip(caxes, bits):
                idx[ax] = b
            idx = tuple(idx)
            m = leg.on_minus if sum(bits) % 2 else leg.on_plus
            sub_axes = [a - sum(1 for c in sorted_c if c < a) for a in axes]
            out[idx] = _apply_matrix(psi[idx], sub_axes, m)
        return out

    def _applied(self, op: Op, psi: np.ndarray | None = None) -> np.ndarray:
        psi = self.psi if psi is None else psi
        for leg in op.legs:
            psi = self._apply_leg(psi, leg)
        return psi

    def apply(self, op: Op) -> "PureState":
        for leg in op.legs:
            if not leg.is_unitary(1e-10):
                raise ValueError(f"non-unitary body in {op.name or 'operator'}")
        self.psi = self._applied(op)
        return self

    # measurement --------------------------------------------------------------
    def _branches(self, op: Op) -> list:
        k = op.order
        if k < 2:
            raise ValueError("observable needs a finite order >= 2")
        powers = [self.psi]
        for _ in range(k - 1):
            powers.append(self._applied(op, powers[-1]))
        out = []
        for e in range(k):
            lam = np.exp(2j * np.pi * e / k)
            v = sum(lam ** (-j) * powers[j] for j in range(k)) / k
            out.append(v)
        return out

    def outcome_probabilities(self, op: Op) -> list[float]:
        return [float(np.vdot(v, v).real) for v in self._branches(op)]

    def measure(self, op: Op, rng) -> int:
        """Projective measurement of a finite-order unitary; returns the exponent ``e``.

        The eigenvalue is ``exp(2 pi i e / k)`` with ``k = op.order``.
        """
        branches = self._branches(op)
        weights = [float(np.vdot(v, v).real) for v in branches]
        weights = [w if w >= WEIGHT_FLOOR else 0.0 for w in weights]
        if sum(weights) < WEIGHT_FLOOR:
            raise NormUnderflow("all projector weights vanish")
        e = sample_index(rng, weights)
        self.psi = branches[e] / np.sqrt(weights[e])
        return e

    def project(self, op: Op, e: int = 0, normalize: bool = True) -> float:
        """Apply the eigenprojector for exponent ``e``; returns the branch weight."""
        v = self._branches(op)[e]
        w = float(np.vdot(v, v).real)
        self.psi = v
        if normalize:
            if w < WEIGHT_FLOOR:
                raise NormUnderflow("projection annihilated the state")
            self.psi = v / np.sqrt(w)
        return w

    def measure_z(self, label, rng) -> int:
        """Measure a qubit in the Z basis without removing it.  Returns 0 (+1) or 1 (-1)."""
        ax = self.axis(label)
        probs = [float(np.sum(np.abs(np.take(self.psi, b, axis=ax)) ** 2)) for b in (0, 1)]
        probs = [p if p >= WEIGHT_FLOOR else 0.0 for p in probs]
        b = sample_index(rng, probs)
        idx = [slice(None)] * self.psi.ndim
        idx[ax] = 1 - b
        self.psi[tuple(idx)] = 0
        self.psi /= np.sqrt(probs[b])
        return b

    def measure_and_remove(self, label, rng, basis: str = "Z") -> int:
        """Measure a single site in the Z (or X) basis and drop it from the register."""
        ax = self.axis(label)
        if basis == "X":
            d = self.psi.shape[ax]
            if d != 2:
                raise ValueError("X-basis readout is defined for qubits only")
            self.psi = _apply_matrix(self.psi, [ax], H2)
        probs = [float(np.sum(np.abs(np.take(self.psi, b, axis=ax)) ** 2))
                 for b in range(self.psi.shape[ax])]
        probs = [p if p >= WEIGHT_FLOOR else 0.0 for p in probs]
        b = sample_index(rng, probs)
        self.remove_site(label, b)
        return b

    # readout ------------------------------------------------------------------
    def expectation(self, op: Op) -> complex:
        return complex(np.vdot(self.psi, self._applied(op)))

    def vector(self, order: Sequence | None = None) -> np.ndarray:
        if order is None:
            return self.psi.reshape(-1)
        if sorted(map(repr, order)) != sorted(map(repr, self.labels)):
            raise ValueError("order must be a permutation of the register labels")
        perm = [self.axis(l) for l in order]
        return np.transpose(self.psi, perm).reshape(-1)

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.psi, other.vector(self.labels).reshape(self.psi.shape)))

    def fidelity(self, other: "PureState") -> float:
        return abs(self.overlap(other)) ** 2

    def dump_json(self, cutoff: float = 1e-12) -> str:
        flat = self.psi.reshape(-1)
        rows = {int(i): [float(flat[i].real), float(flat[i].imag)]
                for i in np.flatnonzero(np.abs(flat) > cutoff)}
        return json.dumps({"labels": [repr(l) for l in self.labels],
                           "dims": list(self.dims), "amplitudes": rows})


def _apply_matrix(psi: np.ndarray, axes: list, m: np.ndarray) -> np.ndarray:
    n = len(axes)
    if n == 1:
        ax = axes[0]
        d = np.diagonal(m)
        if not np.any(m - np.diag(d)):  # diagonal: broadcast a phase vector
            shape = [1] * psi.ndim
            shape[ax] = m.shape[0]
            return psi * d.reshape(shape)
        return np.moveaxis(np.tensordot(m, psi, axes=([1], [ax])), 0, ax)
    front = list(range(psi.ndim - n, psi.ndim))
    moved = np.moveaxis(psi, axes, front)
    shp = moved.shape
    out = (moved.reshape(-1, m.shape[0]) @ m.T).reshape(shp)
    return np.moveaxis(out, front, axes)


def operator_matrix(op: Op, sites: Sequence[tuple]) -> np.ndarray:
    """Dense matrix of ``op`` on the ordered ``sites`` (list of ``(label, dim)``)."""
    st = PureState()
    st.labels = [l for l, _ in sites]
    dims = [d for _, d in sites]
    total = int(np.prod(dims))
    cols = np.eye(total, dtype=complex).reshape(dims + [total])
    st.labels.append("__col__")
    st.psi = cols
    out = st._applied(op)
    return out.reshape(total, total)
