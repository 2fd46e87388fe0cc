import itertools

import numpy as np
import pytest

from s3sim.double import (NONCOMMUTING_OFFSET, flux_resolved, InconsistentRecord, StageOrderError,
                          SyndromeRecord, conjugation_defect, gauging_equivalence, identify_anyon,
                          kitaev_flux, kitaev_vertex_op, measure_suite,
                          projector_commutation_defects, random_support_state,
                          raw_commutator_defect, site_projectors)
from s3sim.group import ELEMENTS, IDENTITY, R, S
from s3sim.hilbert import CQ, XQ, ZQ, X, cpow, gate, operator_matrix, product
from s3sim.lattice import h, qsite, tsite, v

SIDES = ("L", "T", "R", "B")
SITES = [site for s in SIDES for site in ((("q", s), 2), (("t", s), 3))]


@pytest.fixture(scope="module")
def drawn_vertex_terms():
    """The drawn Ã_v and A_v on four isolated (qubit, qutrit) edges."""
    at = product([cpow(("t", "L"), XQ, cond=[("q", "L")]), cpow(("t", "T"), XQ, cond=[("q", "T")]),
                  cpow(("t", "R"), XQ, power=-1), cpow(("t", "B"), XQ, power=-1)], order=3)
    a = product([gate(("q", s), X) for s in SIDES] + [gate(("t", "R"), CQ), gate(("t", "B"), CQ)],
                order=2)
    return operator_matrix(at, SITES), operator_matrix(a, SITES)


def test_drawn_terms_are_kitaev_shifts(drawn_vertex_terms):
    mat, ma = drawn_vertex_terms
    assert np.abs(mat - kitaev_vertex_op(R, None)).max() < 1e-12
    assert np.abs(ma - kitaev_vertex_op(S, None)).max() < 1e-12


def test_kitaev_vertex_average_factorises(drawn_vertex_terms):
    mat, ma = drawn_vertex_terms
    one = np.eye(1296)
    average = sum(kitaev_vertex_op(g, None) for g in ELEMENTS) / 6
    assert np.abs(average - (one + mat + mat @ mat) / 3 @ (one + ma) / 2).max() < 1e-12


def test_flux_free_condition():
    mismatches = 0
    for gs in itertools.product(ELEMENTS, repeat=4):
        q = [g.q for g in gs]
        n = [g.n for g in gs]
        cond = sum(q) % 2 == 0 and \
            (n[0] - n[1] - (-1) ** q[1] * n[2] + (-1) ** q[0] * n[3]) % 3 == 0
        mismatches += (kitaev_flux(gs) == IDENTITY) != cond
    assert mismatches == 0


def test_ground_state_expectations(minimal_patch):
    st, _, _, suite = minimal_patch
    assert st.psi.size == 62208
    for fam in suite.families().values():
        for op in fam.values():
            ops = op if isinstance(op, list) else [op]
            for o in ops:
                assert st.expectation(o) == pytest.approx(1, abs=1e-9)


def test_site_projectors_commute(minimal_patch):
    suite = minimal_patch[3]
    defects = projector_commutation_defects(suite, np.random.default_rng(2))
    assert defects and max(defects.values()) < 1e-10


def test_single_family_projectors_do_not_all_commute(minimal_patch):
    # only the full site projector commutes; Ã(2,1) alone clashes with B̃(1,0)
    suite = minimal_patch[3]
    at, bt = suite.At[(2, 1)], suite.Bt[(1, 0)]
    st = random_support_state([at, bt], np.random.default_rng(0))
    ab = st._applied(at, st._applied(bt))
    ba = st._applied(bt, st._applied(at))
    assert np.linalg.norm(ab - ba) > 0.1


def test_raw_commutator(minimal_patch):
    suite = minimal_patch[3]
    vtx = (2, 1)
    p = (vtx[0] + NONCOMMUTING_OFFSET[0], vtx[1] + NONCOMMUTING_OFFSET[1])
    assert p in suite.Bt
    assert raw_commutator_defect(suite, vtx, np.random.default_rng(5)) < 1e-10


def test_conjugation_relations(minimal_patch):
    suite = minimal_patch[3]
    rng = np.random.default_rng(6)
    checked = 0
    for vtx in suite.At:
        if vtx in suite.A:
            assert conjugation_defect(suite.A[vtx], suite.At[vtx], rng) < 1e-10
            checked += 1
    for p in suite.Bt:
        if p in suite.A:
            assert conjugation_defect(suite.A[p], suite.Bt[p], rng) < 1e-10
            checked += 1
    assert checked >= 3


def test_site_projector_grouping(minimal_patch):
    groups = site_projectors(minimal_patch[3])
    assert all(kind in ("v", "p") for kind, _ in groups)
    assert len(groups[("v", (2, 0))]) == 2


@pytest.mark.slow
def test_gauging_matches_projector_ground_space():
    eq = gauging_equivalence(2, 3, (1, 2), np.random.default_rng(9))
    assert eq["basis_fixed"] > 1 - 1e-9
    assert eq["range_in_span"] > 1 - 1e-9
    assert eq["basis_orthonormal"] < 1e-9
    assert eq["reference_fidelity"] > 1 - 1e-9
    # a qubit times a qutrit: the code space is six dimensional
    assert eq["rank"] == 6


def test_measure_suite_ordering(minimal_patch):
    st, _, _, suite = minimal_patch
    rng = np.random.default_rng(0)
    rec = measure_suite(st.copy(), suite, rng)
    assert not rec.nontrivial()
    with pytest.raises(StageOrderError):
        measure_suite(st.copy(), suite, rng, stages=("A", "B"))
    with pytest.raises(StageOrderError):
        measure_suite(st.copy(), suite, rng, stages=("tilde",))
    bad = SyndromeRecord()
    bad.set("B", (0, 0), 1)
    with pytest.raises(StageOrderError):
        measure_suite(st.copy(), suite, rng, stages=("tilde",), record=bad)


def _record(**vals):
    rec = SyndromeRecord()
    for key, e in vals.items():
        kind, _, which = key.partition("_")
        rec.set(kind.replace("plus", "+").replace("minus", "-"),
                (1, 0) if which == "p" else (2, 1), e)
    return rec


@pytest.mark.parametrize("vals,label", [
    (dict(), "A"),
    (dict(A_v=1), "B"),
    (dict(At_v=1), "C"),
    (dict(Btplus_p=1), "F"),
    (dict(Btplus_p=1, At_v=2), "G"),
    (dict(Btplus_p=1, At_v=1), "H"),
    (dict(B_p=1, Btminus_p=2), "D"),
    (dict(B_p=1, Btminus_p=2, A_v=1), "E"),
])
def test_identify_anyon(vals, label):
    got = identify_anyon(_record(**vals), ((2, 1), (1, 0)))
    assert got.label == label


def test_identify_anyon_rejects_inconsistent_records():
    with pytest.raises(InconsistentRecord):
        identify_anyon(_record(At_v=1, A_v=1), ((2, 1), (1, 0)))
    with pytest.raises(InconsistentRecord):
        identify_anyon(_record(B_p=1), ((2, 1), (1, 0)))
    with pytest.raises(InconsistentRecord):
        identify_anyon(_record(B_p=1, Btplus_p=1, Btminus_p=1), ((2, 1), (1, 0)))
    with pytest.raises(ValueError):
        SyndromeRecord().set("A", (0, 0), 2)


def test_flux_split_forms(minimal_patch):
    suite, lay = minimal_patch[3], minimal_patch[1]
    # boundary plaquettes are truncated, so no split form is produced
    assert not suite.Bt_plus and not suite.Bt_minus
    x, y = 5, 5
    z1, z2 = qsite(v(x, y)), qsite(h(x, y))
    L, T, R, Bo = tsite(v(x, y)), tsite(h(x, y)), tsite(v(x + 1, y)), tsite(h(x, y + 1))
    bt = product([cpow(L, ZQ, power=-1), cpow(T, ZQ), cpow(R, ZQ, cond=(z2,)),
                  cpow(Bo, ZQ, cond=(z1,), power=-1)], order=3)
    plus, minus = flux_resolved(lay, (x, y), bt)
    sites = [(z1, 2), (z2, 2), (L, 3), (T, 3), (R, 3), (Bo, 3)]
    mb, mp, mm = (operator_matrix(o, sites) for o in (bt, plus, minus))
    p0 = np.kron(np.diag([1, 0]), np.eye(162))
    p1 = np.eye(324) - p0
    # B̃+ is B̃ raised to the power Z1
    assert np.allclose(mp, p0 @ mb + p1 @ mb.conj().T, atol=1e-12)
    for m in (mp, mm):
        assert np.allclose(m, np.diag(np.diag(m)), atol=1e-12)
    assert flux_resolved(lay, (x, y), product([cpow(L, ZQ)])) is None
