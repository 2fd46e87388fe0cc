"""S3 group algebra, the shift-operator dictionary on C^2 (x) C^3, and the D(S3) anyon table.

An element s^q r^n is stored as ``GroupElement(q, n)``.  On the six-dimensional edge
space the basis index of s^q r^n is ``3*q + n`` (qubit major, qutrit minor).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np


class GroupElement(NamedTuple):
    q: int  # reflection exponent
    n: int  # rotation exponent

    def index(self) -> int:
        return 3 * self.q + self.n

    def __str__(self) -> str:
        if self == IDENTITY:
            return "e"
        parts = []
        if self.q:
            parts.append("s")
        if self.n == 1:
            parts.append("r")
        elif self.n == 2:
            parts.append("r2")
        return "".join(parts)


def element(q: int, n: int) -> GroupElement:
    if q not in (0, 1) or n not in (0, 1, 2):
        raise ValueError(f"not an S3 element: q={q}, n={n}")
    return GroupElement(q, n)


IDENTITY = GroupElement(0, 0)
R = GroupElement(0, 1)
S = GroupElement(1, 0)
ELEMENTS = tuple(GroupElement(q, n) for q in range(2) for n in range(3))


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    # s^q1 r^n1 s^q2 r^n2 = s^(q1+q2) r^((-1)^q2 n1 + n2)
    sign = -1 if b.q else 1
    return GroupElement((a.q + b.q) % 2, (sign * a.n + b.n) % 3)


def inverse(a: GroupElement) -> GroupElement:
    if a.q:
        return a  # reflections are involutions
    return GroupElement(0, (-a.n) % 3)


def power(a: GroupElement, k: int) -> GroupElement:
    out = IDENTITY
    for _ in range(k % 6):
        out = multiply(out, a)
    return out


def conjugate(g: GroupElement, h: GroupElement) -> GroupElement:
    """Return g h g^-1."""
    return multiply(multiply(g, h), inverse(g))


class ConjugacyClass(NamedTuple):
    label: str
    members: frozenset


def conjugacy_class_of(a: GroupElement) -> ConjugacyClass:
    members = frozenset(conjugate(g, a) for g in ELEMENTS)
    if members == {IDENTITY}:
        label = "[1]"
    elif all(m.q == 0 for m in members):
        label = "[r]"
    else:
        label = "[s]"
    return ConjugacyClass(label, members)


def conjugacy_classes() -> list[ConjugacyClass]:
    seen: dict[frozenset, ConjugacyClass] = {}
    for g in ELEMENTS:
        c = conjugacy_class_of(g)
        seen.setdefault(c.members, c)
    return sorted(seen.values(), key=lambda c: len(c.members))


# Two-dimensional irrep of S3.  Kept as reference data; nothing downstream consumes it.
IRREP_2D = {
    R: np.array([[0, -1], [1, -1]]),
    S: np.array([[-1, 1], [0, 1]]),
}


# --- shift operators ---------------------------------------------------------------

SHIFT_KINDS = ("L+", "L-", "T+", "T-")


def shift_matrix(kind: str, g: GroupElement) -> np.ndarray:
    """Matrix of L^g_+, L^g_-, T^g_+ or T^g_- on the ordered basis |s^q r^n>."""
    m = np.zeros((6, 6), dtype=complex)
    if kind == "L+":
        for h in ELEMENTS:
            m[multiply(g, h).index(), h.index()] = 1
    elif kind == "L-":
        for h in ELEMENTS:
            m[multiply(h, inverse(g)).index(), h.index()] = 1
    elif kind == "T+":
        m[g.index(), g.index()] = 1
    elif kind == "T-":
        gi = inverse(g)
        m[gi.index(), gi.index()] = 1
    else:
        raise ValueError(f"unknown shift kind {kind!r}")
    return m


# --- split extensions Zp x| Zq ------------------------------------------------------

@dataclass(frozen=True)
class GroupSpec:
    """Split extension of a base group by a cyclic symmetry group of order ``q``.

    ``base`` is ``"cyclic"`` for Z_p (automorphism a -> a*t) or ``"z2sq"`` for Z2 x Z2
    with the swap automorphism, the D4 case.
    """

    p: int
    q: int
    t: int
    base: str = "cyclic"
    name: str = ""

    def __post_init__(self):
        if self.base == "cyclic":
            if pow(self.t, self.q, self.p) != 1 % self.p:
                raise ValueError("automorphism order must divide q")
            if np.gcd(self.t, self.p) != 1:
                raise ValueError("t must be a unit mod p")
        elif self.base == "z2sq":
            if self.p != 4 or self.q % 2:
                raise ValueError("Z2 x Z2 base needs p=4 and even q")
        else:
            raise ValueError(f"unknown base {self.base!r}")


S3_SPEC = GroupSpec(p=3, q=2, t=2, name="S3")
D4_SPEC = GroupSpec(p=4, q=2, t=1, base="z2sq", name="D4")


def automorphism_apply(spec: GroupSpec, k: int, a):
    """Apply the k-th power of the symmetry automorphism to a base element."""
    if not 0 <= k < spec.q:
        raise ValueError("symmetry exponent out of range")
    if spec.base == "cyclic":
        return (a * pow(spec.t, k, spec.p)) % spec.p
    x, y = a
    return (y, x) if k % 2 else (x, y)


# --- anyons ------------------------------------------------------------------------

@dataclass(frozen=True)
class AnyonLabel:
    name: str
    conjugacy_class: str
    centralizer_irrep: str
    quantum_dim: int
    set_label: str


_ANYONS = (
    AnyonLabel("A", "[1]", "1", 1, "1"),
    AnyonLabel("B", "[1]", "s", 1, "φ"),
    AnyonLabel("C", "[1]", "2", 2, "[ẽ]"),
    AnyonLabel("D", "[s]", "1", 3, "σ"),
    AnyonLabel("E", "[s]", "s", 3, "φσ"),
    AnyonLabel("F", "[r]", "1", 2, "[m̃]"),
    AnyonLabel("G", "[r]", "ω", 2, "[ẽm̃]"),
    AnyonLabel("H", "[r]", "ω̄", 2, "[ẽm̃²]"),
)

_IRREP_DIMS = {"1": 1, "s": 1, "2": 2, "ω": 1, "ω̄": 1}
_CLASS_SIZES = {"[1]": 1, "[r]": 2, "[s]": 3}


def anyon_table() -> list[AnyonLabel]:
    return list(_ANYONS)


def anyon(name: str) -> AnyonLabel:
    for a in _ANYONS:
        if a.name == name:
            return a
    raise KeyError(name)


def expected_quantum_dim(a: AnyonLabel) -> int:
    return _CLASS_SIZES[a.conjugacy_class] * _IRREP_DIMS[a.centralizer_irrep]


def total_dimension_squared() -> Fraction:
    return Fraction(sum(a.quantum_dim ** 2 for a in _ANYONS))
