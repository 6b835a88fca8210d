import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tbqc.keys import PauliKey, pad_matrix
from tbqc.protocol2 import (
    Protocol2Session,
    Server,
    client_decrypt,
    client_encrypt_data,
    client_encrypt_encoding,
    r_detour_operator,
    run_session,
    strip_combined_key,
    third_decrypt,
    third_encrypt_data,
    third_encrypt_encoding,
)
from tbqc.quantum import GATE_MATRICES, Gate, StateVector, apply_gates, equal_up_to_global_phase, fidelity
from tbqc.suites import random_program, random_state
from tbqc.transport import ProtocolViolation, ScriptedBits, Transcript
from tbqc.uqc import Circuit, Instruction, Program, build_uqc, encode_program, register_state

from conftest import minus, plus


@pytest.fixture(scope="module")
def uqc11():
    return build_uqc(1, 1)


@pytest.fixture(scope="module")
def uqc21():
    return build_uqc(2, 1)


def k1(x, z, m=0):
    return PauliKey((x,) + (0,) * m, (z,) + (0,) * m, 1)


def enc(op, n=1, *w):
    return encode_program(Program((Instruction(op, *w),), n))


# step functions


def test_client_encrypt_examples():
    assert fidelity(client_encrypt_data(StateVector.basis([0], "C"), k1(1, 0)), StateVector.basis([1])) == pytest.approx(1)
    assert np.allclose(client_encrypt_data(plus().with_owner([0], "C"), k1(0, 1)).amplitudes, minus().amplitudes)
    d = plus().with_owner([0], "C")
    assert np.allclose(client_encrypt_data(d, k1(0, 0)).amplitudes, d.amplitudes)


def test_layered_data_examples():
    zero = StateVector.basis([0], "C")

    def layered(kc, kt):
        return third_encrypt_data(client_encrypt_data(zero, kc).with_owner([0], "T"), kt)

    assert np.allclose(layered(k1(0, 0), k1(0, 0)).amplitudes, zero.amplitudes)
    assert equal_up_to_global_phase(layered(k1(1, 0), k1(1, 0)).amplitudes, zero.amplitudes)
    want = GATE_MATRICES["Z"] @ GATE_MATRICES["X"] @ np.array([1, 0])
    assert equal_up_to_global_phase(layered(k1(1, 0), k1(0, 1)).amplitudes, want)


def test_encoding_examples():
    def both(e, kt, kc):
        return client_encrypt_encoding(third_encrypt_encoding(e, kt).with_owner([0], "C"), kc)

    zero_n = lambda x, z: PauliKey((0, x), (0, z), 1)  # noqa: E731
    assert fidelity(third_encrypt_encoding("0", zero_n(1, 0)), StateVector.basis([1])) == pytest.approx(1)
    assert fidelity(both("1", zero_n(0, 1), zero_n(0, 1)), StateVector.basis([1])) == pytest.approx(1)
    assert fidelity(both("0", zero_n(1, 0), zero_n(0, 1)), StateVector.basis([1])) == pytest.approx(1)


def test_decrypt_roundtrip(rng):
    d = random_state(2, rng).with_owner([0, 1], "C")
    kc, kt = PauliKey.random(2, 0, rng), PauliKey.random(2, 0, rng)
    ct = third_encrypt_data(client_encrypt_data(d, kc).with_owner([0, 1], "T"), kt)
    back = client_decrypt(third_decrypt(ct.with_owner([0, 1], "T"), kt).with_owner([0, 1], "C"), kc)
    assert fidelity(back, d) == pytest.approx(1)


def test_encrypt_requires_ownership():
    with pytest.raises(ProtocolViolation):
        client_encrypt_data(StateVector.basis([0], "T"), k1(1, 0))


def test_detour_zero_bits_identity():
    assert np.allclose(r_detour_operator(0, 0, 0), np.eye(2))


def test_detour_master_identity():
    r = GATE_MATRICES["R"]
    for bits in np.ndindex(*(2,) * 8):
        cx, cz, tx, tz, rr, rp, s, sp = bits
        alpha = 0
        beta = alpha ^ ((rr ^ cx) & tx)
        lhs = r_detour_operator(tx, s, sp) @ r_detour_operator(cx, rr, rp) @ r @ pad_matrix(tx, tz) @ pad_matrix(cx, cz)
        nx = rr ^ cx ^ s ^ tx
        nz = (rp ^ alpha ^ cz ^ cx) ^ (sp ^ beta ^ tz ^ tx)
        assert equal_up_to_global_phase(lhs, pad_matrix(nx, nz) @ r)


# sessions


def test_h_on_zero_keys_intermediate_state():
    circuit = Circuit((Gate("H", (0,)),), 1, 1)
    sess = Protocol2Session(circuit, client_source=ScriptedBits([0] * 4), third_source=ScriptedBits([0] * 4))
    sess.encrypt_inputs(StateVector.basis([0]), "1")
    sess.server_evaluate()
    want = apply_gates(StateVector.basis([0]), [Gate("H", (0,))]).tensor(StateVector.basis([1]))
    assert fidelity(sess.state, want) == pytest.approx(1)


def test_no_r_no_andbox():
    circuit = Circuit((Gate("H", (0,)), Gate("CNOT", (1, 0))), 1, 1)
    out, tr = run_session(StateVector.basis([0]), ["1"], circuit, seed=4)
    assert tr.andbox_log == []


def test_nop_dispatch_is_identity(uqc21, rng):
    d = random_state(2, rng)
    out, _ = run_session(d, [enc("NOP", 2)], uqc21, seed=11)
    assert fidelity(out, d) == pytest.approx(1, abs=1e-9)


def test_chain_examples(uqc11):
    e = enc("X", 1, 0)
    one, _ = run_session(StateVector.basis([0]), [e], uqc11, seed=1)
    assert fidelity(one, StateVector.basis([1])) == pytest.approx(1)
    two, _ = run_session(StateVector.basis([0]), [e, e], uqc11, seed=2)
    assert fidelity(two, StateVector.basis([0])) == pytest.approx(1)
    with pytest.raises(ValueError):
        run_session(StateVector.basis([0]), [], uqc11)


def test_evaluated_form_matches_combined_key(uqc21, rng):
    prog = random_program(2, 1, rng)
    e = encode_program(prog)
    d = random_state(2, rng)
    sess = Protocol2Session(uqc21, seed=5)
    sess.run_round(d, e)
    rec = sess.rounds[0]
    stripped = strip_combined_key(rec.post_evaluation, rec.final_key_c, rec.final_key_t)
    want = register_state(apply_gates(d, prog.gates()), e, uqc21.workspace)
    assert fidelity(stripped, want) == pytest.approx(1, abs=1e-9)


def test_andbox_calls_equal_r_count(uqc11):
    out, tr = run_session(StateVector.basis([1]), [enc("R", 1, 0), enc("H", 1, 0)], uqc11, seed=9)
    assert len(tr.andbox_log) == 2 * uqc11.r_count


def test_server_has_no_key_fields():
    names = {f.name for f in dataclasses.fields(Server)}
    assert not any("key" in n for n in names)


def test_no_key_material_reaches_s(uqc11):
    _, tr = run_session(StateVector.basis([0]), [enc("R", 1, 0)], uqc11, seed=3)
    to_s = [m for m in tr.messages if m.receiver == "S"]
    assert to_s and all(m.kind == "quantum" for m in to_s)
    assert all(m.bits is None for m in tr.messages if m.receiver in ("S", "*"))


def test_transcript_deterministic(uqc11):
    a = run_session(StateVector.basis([0]), [enc("H", 1, 0), enc("R", 1, 0)], uqc11, seed=42)[1].to_jsonl()
    b = run_session(StateVector.basis([0]), [enc("H", 1, 0), enc("R", 1, 0)], uqc11, seed=42)[1].to_jsonl()
    c = run_session(StateVector.basis([0]), [enc("H", 1, 0), enc("R", 1, 0)], uqc11, seed=43)[1].to_jsonl()
    assert a == b and a != c


def test_transcript_schema_roundtrip(uqc11, tmp_path):
    _, tr = run_session(StateVector.basis([0]), [enc("R", 1, 0)], uqc11, seed=3)
    path = tmp_path / "t.jsonl"
    tr.write(path)
    msgs = Transcript.read_messages(path)
    assert msgs == tr.messages
    first = json.loads(path.read_text().splitlines()[0])
    assert {"seq", "from", "to", "kind", "step_tag"} <= set(first)


def test_decrypt_before_evaluation_rejected(uqc11):
    sess = Protocol2Session(uqc11, seed=0)
    sess.encrypt_inputs(StateVector.basis([0]), enc("X", 1, 0))
    with pytest.raises(ProtocolViolation):
        sess.decrypt_result()


def test_out_of_order_gate_rejected(uqc11):
    sess = Protocol2Session(uqc11, seed=0)
    sess.encrypt_inputs(StateVector.basis([0]), enc("X", 1, 0))
    with pytest.raises(ProtocolViolation):
        sess.client.on_gate(uqc11.gates[3], 4)


def test_scripted_randomness_exhausted(uqc11):
    sess = Protocol2Session(uqc11, client_source=ScriptedBits([0, 1]))
    with pytest.raises(ProtocolViolation):
        sess.run_round(StateVector.basis([0]), enc("X", 1, 0))


@settings(max_examples=12, deadline=None)
@given(seed=st.integers(0, 2**63 - 1), n=st.integers(1, 2), v=st.integers(1, 3))
def test_correctness_random(seed, n, v, uqc11, uqc21):
    rng = np.random.default_rng(seed)
    prog = random_program(n, v, rng)
    d = random_state(n, rng)
    circuit = uqc11 if n == 1 else uqc21
    out, tr = run_session(d, [encode_program(b) for b in prog.blocks(1)], circuit, seed=seed, record_notify=False)
    assert fidelity(out, apply_gates(d, prog.gates())) == pytest.approx(1, abs=1e-9)
    assert len(tr.andbox_log) == circuit.r_count * v
