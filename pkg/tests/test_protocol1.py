import numpy as np
import pytest

from tbqc.protocol1 import (
    BrickworkLayout,
    Byproducts,
    MeasurementLedger,
    Protocol1Session,
    client_encrypt_inputs,
    client_final_correction,
    collusion_break_demo,
    compute_delta,
    line_oracle,
    mbqc_oracle,
    named_pattern,
    parse_pattern,
    server_alone_input_view,
    server_build_brickwork,
    third_prepare_qubits,
)
from tbqc.quantum import StateVector, equal_up_to_global_phase, fidelity, trace_distance

from conftest import S2, minus, plus


def enc_in(state, theta, flip):
    return client_encrypt_inputs(state.with_owner(range(state.wire_count), "C"), MeasurementLedger(), None, [theta], [flip])


def test_client_encrypt_examples():
    assert equal_up_to_global_phase(enc_in(plus(), 0, 0).amplitudes, plus().amplitudes)
    assert equal_up_to_global_phase(enc_in(StateVector.basis([0]), 2, 1).amplitudes, [0, 1])
    assert equal_up_to_global_phase(enc_in(plus(), 4, 0).amplitudes, minus().amplitudes)


def test_third_prepare_examples():
    layout = BrickworkLayout.linear(3)
    led = MeasurementLedger()
    st = third_prepare_qubits(layout, led, None, [0, 0])
    assert np.allclose(st.amplitudes, np.full(4, 0.5))
    st = third_prepare_qubits(BrickworkLayout.linear(2), MeasurementLedger(), None, [1])
    assert np.allclose(st.amplitudes, [S2, S2 * np.exp(1j * np.pi / 4)])
    assert third_prepare_qubits(BrickworkLayout.linear(1), MeasurementLedger(), None) is None


def test_build_graph_examples():
    layout = BrickworkLayout.linear(1)
    st = server_build_brickwork(plus(), layout)
    assert np.allclose(st.amplitudes, [0.5, 0.5, 0.5, -0.5])


def test_layout_validation():
    with pytest.raises(ValueError):
        BrickworkLayout(2, 1, (((0, 1), (1, 1)),))
    with pytest.raises(ValueError):
        BrickworkLayout(1, 1, (((0, 1), (1, 1)), ((0, 1), (1, 1))))


def test_correction_examples():
    st = StateVector.basis([0])
    assert client_final_correction(st, {1: (0, 0)}) == st
    assert fidelity(client_final_correction(st, {1: (1, 0)}), StateVector.basis([1])) == pytest.approx(1)


def test_delta_formula():
    assert compute_delta(0, 0, 0) == 0
    assert compute_delta(2, 1, 1) == 7
    assert compute_delta(2, 1, 0, input_flip=1) == 5


def test_byproduct_flow():
    layout = BrickworkLayout.linear(2)
    bp = Byproducts(layout)
    bp.record((0, 1), 1)
    assert bp.x[(1, 1)] == 1 and bp.z[(2, 1)] == 1
    assert bp.adapted_angle((1, 1), 3) == 5


def test_parse_pattern():
    assert parse_pattern("0 1\n# c\n4, 9\n") == [[0, 1], [4, 1]]
    with pytest.raises(ValueError):
        parse_pattern("0 1\n2\n")


def test_single_column_zero_angles_realise_h():
    # all-zero angles on one column give H, not the identity
    res = Protocol1Session(BrickworkLayout.linear(1), named_pattern("identity", 1), 0).run(
        StateVector.basis([0]), thetas0=[0], flips0=[0], rs=[0]
    )
    assert fidelity(res.output, plus()) == pytest.approx(1)
    assert fidelity(res.output, mbqc_oracle(StateVector.basis([0]), BrickworkLayout.linear(1), [[0]])) == pytest.approx(1)


@pytest.mark.parametrize("cols", [1, 2, 3, 4])
@pytest.mark.parametrize("name", ["identity", "x"])
def test_end_to_end_matches_oracles(cols, name):
    layout = BrickworkLayout.linear(cols)
    pattern = named_pattern(name, cols)
    for st in (StateVector.basis([0]), StateVector.basis([1]), plus()):
        want = mbqc_oracle(st, layout, pattern)
        assert fidelity(want, line_oracle(st, pattern)) == pytest.approx(1)
        for seed in range(25):
            out = Protocol1Session(layout, pattern, seed).run(st).output
            assert fidelity(out, want) == pytest.approx(1, abs=1e-9)


def test_even_identity_is_identity(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    st = StateVector(v / np.linalg.norm(v))
    out = Protocol1Session(BrickworkLayout.linear(4), named_pattern("identity", 4), 8).run(st).output
    assert fidelity(out, st) == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize("name", ["identity", "x"])
def test_two_rows(name, rng):
    layout = BrickworkLayout.linear(2, rows=2)
    pattern = named_pattern(name, 2, rows=2)
    v = rng.normal(size=4) + 1j * rng.normal(size=4)
    st = StateVector(v / np.linalg.norm(v))
    want = mbqc_oracle(st, layout, pattern)
    for seed in range(20):
        assert fidelity(Protocol1Session(layout, pattern, seed).run(st).output, want) == pytest.approx(1, abs=1e-9)


def test_brickwork_random_angles(rng):
    for cols in (1, 2, 3):
        layout = BrickworkLayout.brickwork(cols, 2)
        pattern = [[int(a) for a in rng.integers(0, 8, size=2)] for _ in range(cols)]
        st = StateVector.basis([1, 0])
        want = mbqc_oracle(st, layout, pattern)
        for seed in range(10):
            assert fidelity(Protocol1Session(layout, pattern, seed).run(st).output, want) == pytest.approx(1, abs=1e-9)


def test_size_budget():
    with pytest.raises(ValueError):
        Protocol1Session(BrickworkLayout.linear(6, rows=2), named_pattern("identity", 6, 2))


@pytest.mark.parametrize("bit", [0, 1])
def test_collusion_break(bit):
    for seed in range(30):
        res = Protocol1Session(BrickworkLayout.linear(2), named_pattern("identity", 2), seed).run(StateVector.basis([bit]))
        brk = collusion_break_demo(res)
        assert brk.recovered_input == [bit]
        assert fidelity(brk.recovered_output, res.output) == pytest.approx(1)


def test_server_alone_sees_maximally_mixed():
    for st in (StateVector.basis([0]), StateVector.basis([1])):
        assert trace_distance(server_alone_input_view(st), np.eye(2) / 2) <= 1e-10


def test_transcript_deterministic():
    run = lambda s: Protocol1Session(BrickworkLayout.linear(3), named_pattern("x", 3), s).run(plus()).transcript.to_jsonl()  # noqa: E731
    assert run(5) == run(5) and run(5) != run(6)


def test_server_never_sees_theta():
    tr = Protocol1Session(BrickworkLayout.linear(3), named_pattern("x", 3), 1).run(plus()).transcript
    labels = {m.label for m in tr.messages if m.receiver == "S" and m.kind == "classical"}
    assert labels == {"delta"}
