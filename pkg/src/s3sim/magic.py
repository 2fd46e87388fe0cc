"""Six-level magic-state computation: Z6 Hadamard, controlled charge conjugation, branch tables.

Basis order is ``{1, ba, a^2, b, a, ba^2}``, i.e. powers of the Z6 generator ``g = ba``.
``b`` is the qubit generator and ``a`` the qutrit one.  ``OMEGA6 = exp(2 pi i / 6)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .hilbert import H2, H3, dagger

OMEGA6 = np.exp(2j * np.pi / 6)

# Z6 basis position i holds g^i = b^(i mod 2) a^(i mod 3); (q, n) -> position
BASIS_LABELS = ("1", "ba", "a2", "b", "a", "ba2")
POSITION = {(i % 2, i % 3): i for i in range(6)}


def to_tensor_order(i: int) -> int:
    """Z6 position -> qubit-major index ``3q + n``."""
    return 3 * (i % 2) + (i % 3)


def reorder_matrix() -> np.ndarray:
    """Permutation P with ``P @ v_z6 = v_tensor``."""
    p = np.zeros((6, 6))
    for i in range(6):
        p[to_tensor_order(i), i] = 1
    return p


def build_H6() -> np.ndarray:
    return np.array([[OMEGA6 ** (j * k) for k in range(6)] for j in range(6)]) / np.sqrt(6)


def build_CC6() -> np.ndarray:
    """The permutation matrix as displayed: exchanges positions 1 (ba) and 4 (a)."""
    return np.eye(6, dtype=complex)[[0, 4, 2, 3, 1, 5]]


def true_CC6() -> np.ndarray:
    """Controlled charge conjugation in the same basis: exchanges ba and ba^2."""
    return np.eye(6, dtype=complex)[[0, 5, 2, 3, 4, 1]]


def displayed_HCCH() -> np.ndarray:
    s = np.sqrt(3) * 1j
    m = np.array([
        [3, 0, 0, 0, 0, 0],
        [0, 1, 0, 1 - s, 0, 1 + s],
        [0, 0, 1, 0, 0, 0],
        [0, 1 + s, 0, 1, 0, 1 - s],
        [0, 0, 0, 0, 1, 0],
        [0, 1 - s, 0, 1 + s, 0, 1],
    ], dtype=complex)
    return m / 3


def h2_h3dag_z6_order() -> np.ndarray:
    p = reorder_matrix()
    return p.T @ np.kron(H2, dagger(H3)) @ p


def input_state() -> np.ndarray:
    v = np.zeros(6, dtype=complex)
    v[0] = v[3] = 1 / np.sqrt(2)  # (|1> + |b>)/sqrt 2
    return v


def hcch_state(cc: np.ndarray | None = None) -> np.ndarray:
    H = build_H6()
    cc = build_CC6() if cc is None else cc
    return dagger(H) @ cc @ H @ input_state()


@dataclass(frozen=True)
class Branch:
    label: str
    probability: float
    exact: Fraction | None
    state: np.ndarray


def _exact(p: float) -> Fraction | None:
    f = Fraction(p).limit_denominator(1000)
    return f if abs(float(f) - p) < 1e-12 else None


def run_magic(measure_layer: str, cc: np.ndarray | None = None) -> list[Branch]:
    """Branches of measuring the qutrit (``Zq``-bar) or the qubit (``Z``-bar) layer."""
    psi = hcch_state(cc)
    # amplitude array indexed [q, n]
    amp = np.zeros((2, 3), dtype=complex)
    for i in range(6):
        amp[i % 2, i % 3] = psi[i]
    out = []
    if measure_layer == "qutrit":
        for n in range(3):
            vec = amp[:, n]
            p = float(np.vdot(vec, vec).real)
            post = vec / np.sqrt(p) if p > 1e-15 else vec
            out.append(Branch(f"Zq=w^{n}", p, _exact(p), _phase_fix(post)))
    elif measure_layer == "qubit":
        for q in range(2):
            vec = amp[q, :]
            p = float(np.vdot(vec, vec).real)
            post = vec / np.sqrt(p) if p > 1e-15 else vec
            out.append(Branch(f"Z={1 - 2 * q:+d}", p, _exact(p), _phase_fix(post)))
    else:
        raise ValueError("measure_layer must be 'qutrit' or 'qubit'")
    return out


def _phase_fix(v: np.ndarray) -> np.ndarray:
    """Make the first nonzero amplitude real and positive."""
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if len(nz) == 0:
        return v
    v = v * np.exp(-1j * np.angle(v[nz[0]]))
    # snap rounding noise so tables print clean zeros
    return np.where(np.abs(v.real) < 1e-14, 0, v.real) + 1j * np.where(np.abs(v.imag) < 1e-14, 0, v.imag)


STABILIZER_BLOCH = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]])


def bloch_vector(v: np.ndarray) -> np.ndarray:
    a, b = v / np.linalg.norm(v)
    return np.array([2 * (np.conj(a) * b).real, 2 * (np.conj(a) * b).imag, abs(a) ** 2 - abs(b) ** 2])


def stabilizer_distance(v: np.ndarray) -> float:
    return float(np.min(np.linalg.norm(STABILIZER_BLOCH - bloch_vector(v), axis=1)))


def branch_table_csv(branches: list[Branch]) -> str:
    lines = ["branch,probability,amplitudes"]
    for b in branches:
        p = str(b.exact) if b.exact is not None else f"{b.probability:.15g}"
        amps = ";".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in b.state)
        lines.append(f"{b.label},{p},{amps}")
    return "\n".join(lines) + "\n"


# --- lattice cross-check -------------------------------------------------------------

def z6_to_amps(v: np.ndarray) -> np.ndarray:
    amp = np.zeros((2, 3), dtype=complex)
    for i in range(6):
        amp[i % 2, i % 3] = v[i]
    return amp


def amps_to_z6(amp: np.ndarray) -> np.ndarray:
    return np.array([amp[i % 2, i % 3] for i in range(6)])


@dataclass
class CrossCheck:
    runs: int
    shots: int
    lattice_prob: float
    counts: int
    frequency: float
    reference: float
    sigma: float
    max_output_deviation: float

    @property
    def within_3sigma(self) -> bool:
        return abs(self.frequency - self.reference) <= 3 * self.sigma + 1e-12


def lattice_cross_check(shots: int = 10000, runs: int = 4, seed: int = 0,
                        reference: float = 5 / 9, config=None) -> CrossCheck:
    """Slide the qubit code through the qutrit code on the H-conjugated input.

    The Hadamard (and the code rotation it needs) is applied at the logical level.  The
    lattice output is decoded into logical amplitudes; every run must give the same
    logical state, whose Zq-bar = 1 weight is then sampled ``shots`` times.
    """
    from .protocol import ProtocolConfig, logical_amplitudes, run_protocol
    config = config or ProtocolConfig(seed=seed)
    rng = np.random.default_rng(seed)
    H = build_H6()
    amps = z6_to_amps(H @ input_state())
    outs = []
    for _ in range(runs):
        final, layout, _, _ = run_protocol(config, amps, rng)
        out = amps_to_z6(logical_amplitudes(final, layout))
        outs.append(dagger(H) @ out)
    ref = outs[0]
    dev = max(1 - abs(np.vdot(ref, o)) ** 2 for o in outs)
    amp = z6_to_amps(ref)
    p = float(np.vdot(amp[:, 0], amp[:, 0]).real)
    counts = int(rng.binomial(1, min(max(p, 0.0), 1.0), size=shots).sum())
    freq = counts / shots
    sigma = np.sqrt(reference * (1 - reference) / shots)
    return CrossCheck(runs, shots, p, counts, freq, reference, sigma, dev)
