import itertools

import numpy as np
import pytest

from s3sim.hilbert import (CQ, OMEGA, XQ, ZQ, BudgetExceeded, ForcedOutcomes, Leg, NormUnderflow,
                           Op, PureState, X, Z, controlled, cpow, dense, enumerate_branches, gate,
                           is_unitary, operator_matrix, product)


def test_product_states():
    assert np.allclose(PureState.product([("a", 2, "+")]).vector(), [1 / np.sqrt(2)] * 2)
    assert np.allclose(PureState.product([("t", 3, 0)]).vector(), [1, 0, 0])
    st = PureState.product([("a", 2, "+"), ("t", 3, 0)])
    assert np.allclose(st.vector(), np.array([1, 0, 0, 1, 0, 0]) / np.sqrt(2))


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        PureState.product([(i, 3, 0) for i in range(5)], budget=100)


def test_controlled_charge_conjugation():
    st = PureState.product([("c", 2, 1), ("t", 3, 1)])
    st.apply(controlled("c", "t", CQ))
    assert abs(st.vector()[3 + 2]) == pytest.approx(1)
    st = PureState.product([("c", 2, 0), ("t", 3, 2)])
    st.apply(controlled("c", "t", CQ))
    assert abs(st.vector()[2]) == pytest.approx(1)


def test_conditioned_power_phase():
    st = PureState.product([("q", 2, 1), ("t", 3, 1)])
    before = st.vector().copy()
    st.apply(cpow("t", ZQ, cond=["q"]))
    assert np.allclose(st.vector(), before * OMEGA ** -1)


def test_conditioned_form_matches_dense_sum():
    # Σ_z P_z ⊗ W^f(z) built by hand on qubit, qubit, qutrit, qutrit (dim 36)
    rng = np.random.default_rng(0)
    sites = [("a", 2), ("b", 2), ("s", 3), ("t", 3)]
    for w, power in itertools.product((XQ, ZQ), (1, -1)):
        op = product([cpow("s", w, cond=["a", "b"], power=power), cpow("t", w, cond=["b"])])
        want = np.zeros((36, 36), dtype=complex)
        for za, zb in itertools.product((0, 1), repeat=2):
            pa = np.diag([1 - za, za])
            pb = np.diag([1 - zb, zb])
            ks = power * (-1) ** (za + zb)
            kt = (-1) ** zb
            want += np.kron(np.kron(pa, pb), np.kron(np.linalg.matrix_power(w, ks % 3),
                                                     np.linalg.matrix_power(w, kt % 3)))
        assert np.allclose(operator_matrix(op, sites), want, atol=1e-12)
        v = rng.normal(size=36) + 1j * rng.normal(size=36)
        st = PureState()
        st.labels = [l for l, _ in sites]
        st.psi = v.reshape(2, 2, 3, 3) / np.linalg.norm(v)
        st.apply(op)
        assert st.norm() == pytest.approx(1, abs=1e-9)


def test_leg_validation():
    with pytest.raises(ValueError):
        Leg(("a",), XQ, XQ, ("a",))
    with pytest.raises(ValueError):
        Leg(("a",), XQ, None, ("b",))
    st = PureState.product([("a", 2, 0)])
    with pytest.raises(ValueError):
        st.apply(dense(["a"], np.array([[1, 1], [0, 1]])))


def test_measurement_and_expectation():
    st = PureState.product([("a", 2, "+")])
    assert st.expectation(gate("a", Z)) == pytest.approx(0)
    assert st.outcome_probabilities(gate("a", Z).with_order(2)) == pytest.approx([0.5, 0.5])
    assert st.expectation(Op()) == pytest.approx(1)


def test_measurement_statistics_within_3sigma():
    rng = np.random.default_rng(7)
    base = PureState.product([("t", 3, np.array([1, 1j, np.sqrt(2)]) / 2)])
    obs = gate("t", XQ).with_order(3)
    probs = base.outcome_probabilities(obs)
    shots = 10000
    counts = np.zeros(3)
    for _ in range(shots):
        counts[base.copy().measure(obs, rng)] += 1
    sigma = np.sqrt(np.array(probs) * (1 - np.array(probs)) / shots)
    assert np.all(np.abs(counts / shots - probs) <= 3 * sigma + 1e-12)


def test_norm_underflow():
    st = PureState.product([("a", 2, 0)])
    with pytest.raises(NormUnderflow):
        st.project(gate("a", Z).with_order(2), 1)


def test_forced_outcomes_and_branches():
    st = PureState.product([("a", 2, "+")])
    obs = gate("a", Z).with_order(2)
    assert st.copy().measure(obs, ForcedOutcomes([1])) == 1
    with pytest.raises(NormUnderflow):
        PureState.product([("a", 2, 0)]).measure(obs, ForcedOutcomes([1]))
    # XZX = -Z, so |0> reads exponent 1 with certainty
    assert PureState.product([("a", 2, 0)]).measure(gate("a", X @ Z @ X).with_order(2),
                                                     ForcedOutcomes([1])) == 1

    def run(ch):
        s = PureState.product([("a", 2, "+"), ("b", 2, "+")])
        return (s.measure(gate("a", Z).with_order(2), ch), s.measure(gate("b", Z).with_order(2), ch))
    leaves = list(enumerate_branches(run))
    assert len(leaves) == 4
    assert sum(p for p, _, _ in leaves) == pytest.approx(1)


def test_state_dump_roundtrip_fields():
    import json
    st = PureState.product([("a", 2, "+")])
    d = json.loads(st.dump_json())
    assert d["dims"] == [2] and len(d["amplitudes"]) == 2


def test_unitarity_helpers():
    for m in (X, Z, XQ, ZQ, CQ):
        assert is_unitary(m)
    assert np.allclose(np.linalg.matrix_power(XQ, 3), np.eye(3))
