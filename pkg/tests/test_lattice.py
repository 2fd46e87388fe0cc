import itertools

import numpy as np
import pytest

from s3sim.hilbert import OMEGA, PureState
from s3sim.lattice import (PAIR, QUBIT, QUTRIT, LayeredLayout, ShrinkTracker, UnmatchedSyndrome,
                           Z3_PLAQUETTE_SIGNS, Z3_VERTEX_SIGNS, abelian_decode,
                           abelian_ground_state, build_layout, correction_op, encode,
                           error_syndrome, extend_right, h, logical_operators, register_sites,
                           shrink_left, stabilizer_set, v)
from s3sim.protocol import logical_amplitudes


def _random_state(sites, rng):
    st = PureState()
    st.labels = [l for l, _ in sites]
    dims = [d for _, d in sites]
    psi = rng.normal(size=dims) + 1j * rng.normal(size=dims)
    st.psi = psi / np.linalg.norm(psi)
    return st


def test_window_geometry():
    lay = build_layout(2, 3, (0, 2), (1, 2))
    assert lay.overlap == (1, 2)
    assert len(lay.edges(lay.qubit_window)) == 8
    assert len(lay.edges(lay.qutrit_window)) == 5
    assert lay.total_dimension() == 2 ** 8 * 3 ** 5
    assert lay.vertices((1, 2)) == [(2, 0), (2, 1)]
    assert lay.vertex_legs((2, 0), (1, 2)) == {"left": h(1, 0), "right": h(2, 0),
                                               "bottom": v(2, 0)}
    assert LayeredLayout.from_json(lay.to_json()) == lay
    with pytest.raises(ValueError):
        build_layout(2, 3, (1, 3))
    with pytest.raises(ValueError):
        build_layout(2, 3)


def test_sign_patterns():
    assert Z3_VERTEX_SIGNS == {"left": 1, "top": 1, "right": -1, "bottom": -1}
    assert Z3_PLAQUETTE_SIGNS == {"left": -1, "top": 1, "right": 1, "bottom": -1}
    lay = build_layout(3, 4, None, (0, 3))
    full = [s for s in stabilizer_set(lay, QUTRIT) if s.kind == "qutrit-vertex" and not s.truncated]
    assert full and all(len(s.terms) == 4 for s in full)
    assert all(s.order == 3 for s in stabilizer_set(lay, QUTRIT))


@pytest.mark.parametrize("layer,base", [(QUBIT, "qutrit"), (QUTRIT, "qutrit"), (PAIR, PAIR)])
def test_stabilizers_commute(layer, base):
    lay = build_layout(2, 3, (0, 2) if layer == QUBIT else None,
                       None if layer == QUBIT else (0, 2), base=base)
    stabs = [s.op() for s in stabilizer_set(lay, layer)]
    rng = np.random.default_rng(3)
    st = _random_state(register_sites(lay), rng)
    for a, b in itertools.combinations(stabs, 2):
        ab = st.copy().apply(b).apply(a).vector()
        ba = st.copy().apply(a).apply(b).vector()
        assert np.allclose(ab, ba, atol=1e-12)


@pytest.mark.parametrize("layer,phase", [(QUBIT, -1), (QUTRIT, OMEGA)])
def test_logical_algebra(layer, phase):
    lay = build_layout(2, 3, (0, 2) if layer == QUBIT else None,
                       None if layer == QUBIT else (0, 2))
    zs, xs = logical_operators(lay, layer)
    zb, xb = zs.op(layer), xs.op(layer)
    st = _random_state(register_sites(lay), np.random.default_rng(4))
    zx = st.copy().apply(xb).apply(zb).vector()
    xz = st.copy().apply(zb).apply(xb).vector()
    assert np.allclose(zx, phase * xz, atol=1e-12)
    # logicals commute with every stabilizer
    g = abelian_ground_state(lay)
    for s in stabilizer_set(lay, layer):
        moved = g.copy().apply(xb)
        assert moved.expectation(s.op()) == pytest.approx(1, abs=1e-12)


def test_ground_state_is_stabilized():
    lay = build_layout(2, 4, (0, 1), (2, 3))
    g = abelian_ground_state(lay)
    for layer in (QUBIT, QUTRIT):
        for s in stabilizer_set(lay, layer):
            assert g.expectation(s.op()) == pytest.approx(1, abs=1e-12)
    with pytest.raises(ValueError):
        abelian_ground_state(build_layout(2, 3, (0, 2), (1, 2)))


def test_extend_then_shrink_preserves_logical_state():
    lay = build_layout(2, 5, (0, 1), (4, 4))
    amps = np.array([[0.6, 0, 0], [0.8j, 0, 0]])
    for seed in range(6):
        rng = np.random.default_rng(seed)
        st = encode(lay, amps)
        wide, log = extend_right(st, lay, QUBIT, 2, rng)
        assert wide.qubit_window == (0, 2)
        tracker = ShrinkTracker(origin=0, rows=2)
        narrow, log, frontier = shrink_left(st, wide, QUBIT, 0, tracker, rng, log)
        assert narrow.qubit_window == (1, 2)
        assert frontier == [(1, 0), (1, 1)]
        got = logical_amplitudes(st, narrow)
        assert abs(np.vdot(amps.reshape(-1), got.reshape(-1))) ** 2 == pytest.approx(1, abs=1e-10)


def test_extend_and_shrink_validation():
    lay = build_layout(2, 4, (0, 1), None)
    st = abelian_ground_state(lay)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        extend_right(st, lay, QUBIT, 3, rng)
    with pytest.raises(ValueError):
        extend_right(st, lay, QUTRIT, 2, rng)
    with pytest.raises(ValueError):
        shrink_left(st, build_layout(2, 4, (1, 1), None), QUBIT, 1, ShrinkTracker(1, 2), rng)


@pytest.mark.parametrize("layer", [QUBIT, QUTRIT])
@pytest.mark.parametrize("stab_kind", ["vertex", "plaquette"])
def test_abelian_decode_weight_one(layer, stab_kind):
    lay = build_layout(3, 4, (0, 3) if layer == QUBIT else None,
                       None if layer == QUBIT else (0, 3))
    mod = 2 if layer == QUBIT else 3
    for e in lay.edges(lay.window(layer)):
        for k in range(1, mod):
            syn = error_syndrome(lay, layer, stab_kind, {e: k})
            corr = abelian_decode(syn, lay, layer, stab_kind)
            total = dict(corr)
            total[e] = (total.get(e, 0) + k) % mod
            assert not error_syndrome(lay, layer, stab_kind, total)
            assert sum(1 for p in corr.values() if p) <= 1


def test_abelian_decode_rejects_foreign_syndrome():
    lay = build_layout(2, 3, (0, 2), None)
    with pytest.raises(UnmatchedSyndrome):
        abelian_decode({(9, 9): 1}, lay, QUBIT, "vertex")


def test_correction_clears_measured_syndrome():
    lay = build_layout(2, 3, None, (0, 2))
    g = abelian_ground_state(lay)
    err = {h(1, 0): 1, v(2, 0): 2}
    g.apply(correction_op(lay, QUTRIT, "vertex", err))  # Zq errors flip vertex stabilizers
    syn = error_syndrome(lay, QUTRIT, "vertex", err)
    assert syn
    g.apply(correction_op(lay, QUTRIT, "vertex", abelian_decode(syn, lay, QUTRIT, "vertex")))
    for s in stabilizer_set(lay, QUTRIT):
        assert g.expectation(s.op()) == pytest.approx(1, abs=1e-12)
