import json

import numpy as np
import pytest

from s3sim.decoder import in_ground_space
from s3sim.double import projector_suite
from s3sim.protocol import (ProtocolConfig, d4_config, ideal_gate, logical_amplitudes,
                            logical_target, round_trip, run_protocol, spanning_inputs,
                            verify_logical_action)

S3 = ProtocolConfig(rows=2, qubit_window=(0, 1), qutrit_window=(2, 3), seed=3)


@pytest.fixture(scope="module")
def s3_report():
    return verify_logical_action(S3)


def test_s3_fidelities(s3_report):
    assert len(s3_report.fidelities) == 8
    assert s3_report.min_fidelity > 1 - 1e-9


def test_s3_heisenberg_picture(s3_report):
    assert max(s3_report.heisenberg.values()) < 1e-8


def test_ideal_gate_is_controlled_charge_conjugation():
    u = ideal_gate(S3)
    want = np.eye(6)
    want[[4, 5]] = want[[5, 4]]
    assert np.array_equal(u, want)
    amps = np.arange(6, dtype=complex).reshape(2, 3)
    assert np.array_equal(logical_target(S3, amps), [[0, 1, 2], [3, 5, 4]])


@pytest.mark.slow
def test_d4_controlled_swap():
    cfg = d4_config(rows=2, qubit_window=(0, 1), qutrit_window=(2, 3), seed=1)
    u = ideal_gate(cfg)
    # |1, b0 b1> -> |1, b1 b0>: a Fredkin gate on the qubit and the two base bits
    assert u[4 + 2, 4 + 1] == 1 and u[4 + 1, 4 + 2] == 1 and u[4 + 3, 4 + 3] == 1
    rep = verify_logical_action(cfg, heisenberg_samples=1)
    assert rep.min_fidelity > 1 - 1e-9
    assert max(rep.heisenberg.values()) < 1e-8


def test_trace_and_code_space_invariants():
    amps = spanning_inputs(S3)["|+,1>"]
    seen = []

    def check(state, layout, controls, step):
        seen.append(in_ground_space(state, projector_suite(layout, controls)))

    final, layout, trace, _ = run_protocol(S3, amps, np.random.default_rng(8), check)
    assert all(seen) and len(seen) == len(S3.schedule())
    assert layout == S3.output_layout()
    rows = [json.loads(line) for line in trace.to_jsonl().splitlines()]
    assert [r["op"] for r in rows] == [op for op, _ in S3.schedule()]
    assert all(r["loop_class"] in ("contractible", "non-contractible", "open", "") for r in rows)
    got = logical_amplitudes(final, layout)
    assert abs(np.vdot(logical_target(S3, amps).reshape(-1), got.reshape(-1))) ** 2 > 1 - 1e-9


def test_round_trip_is_identity():
    amps = np.array([[0.5, 0.5j, 0], [0, 0.5, -0.5]])
    assert round_trip(S3, amps, np.random.default_rng(2)) > 1 - 1e-9


def test_validation():
    with pytest.raises(ValueError):
        ProtocolConfig(qubit_window=(0, 2), qutrit_window=(2, 3)).validate()
    with pytest.raises(ValueError, match="budget"):
        ProtocolConfig(budget=1000).validate()
    assert S3.schedule()[:2] == [("extend", 2), ("shrink", 0)]
