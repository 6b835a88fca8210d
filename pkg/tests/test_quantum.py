import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tbqc.quantum import (
    GATE_MATRICES,
    Gate,
    QuantumError,
    StateVector,
    apply_gate,
    circuit_unitary,
    density_of,
    equal_up_to_global_phase,
    fidelity,
    is_density_matrix,
    measure_in_basis,
    outcome_probabilities,
    prepare_plus_theta,
    trace_distance,
)

from conftest import S2, plus

W8 = np.exp(1j * np.pi / 4)


def test_gate_examples():
    assert fidelity(apply_gate(StateVector.basis([0]), Gate("X", (0,))), StateVector.basis([1])) == pytest.approx(1)
    h0 = apply_gate(StateVector.basis([0]), Gate("H", (0,)))
    assert np.allclose(h0.amplitudes, [S2, S2])
    r = apply_gate(plus(), Gate("R", (0,)))
    assert np.allclose(r.amplitudes, [S2, W8 * S2])


@pytest.mark.parametrize("kind", ["X", "Y", "Z", "H", "P", "R"])
def test_single_gate_matrix_oracle(kind):
    assert np.array_equal(circuit_unitary([Gate(kind, (0,))], 1), GATE_MATRICES[kind])


def test_two_qubit_matrices_little_endian():
    # control wire 0 = low bit
    cnot = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]])
    assert np.array_equal(circuit_unitary([Gate("CNOT", (0, 1))], 2), cnot)
    assert np.array_equal(circuit_unitary([Gate("CZ", (0, 1))], 2), np.diag([1, 1, 1, -1]))


def test_documented_phase_matrices():
    assert np.allclose(GATE_MATRICES["P"], np.diag([1, 1j]))
    assert np.allclose(GATE_MATRICES["R"], np.diag([1, W8]))
    rz = Gate("RZ", (0,), 0.3).matrix()
    assert np.allclose(rz, np.diag([1, np.exp(0.3j)]))


def test_gate_errors():
    with pytest.raises(QuantumError):
        Gate("CNOT", (1, 1))
    with pytest.raises(QuantumError):
        Gate("H", (0, 1))
    with pytest.raises(QuantumError):
        apply_gate(StateVector.basis([0]), Gate("X", (3,)))


def test_plus_theta():
    assert np.allclose(prepare_plus_theta(0).amplitudes, [S2, S2])
    assert np.allclose(prepare_plus_theta(np.pi).amplitudes, [S2, -S2])
    assert np.allclose(prepare_plus_theta(np.pi / 4).amplitudes, [S2, W8 * S2])


def test_measurement_eigenstates(rng):
    for delta in (0, np.pi / 4, 3 * np.pi / 4):
        plus_d = prepare_plus_theta(delta)
        minus_d = prepare_plus_theta(delta + np.pi)
        assert measure_in_basis(plus_d, 0, delta, rng, remove=False)[0] == 0
        assert measure_in_basis(minus_d, 0, delta, rng, remove=False)[0] == 1
    assert outcome_probabilities(StateVector.basis([0]), 0, 0) == pytest.approx((0.5, 0.5))


def test_born_statistics_three_sigma(rng):
    state = apply_gate(apply_gate(StateVector.basis([0, 0]), Gate("H", (1,))), Gate("RZ", (1,), 1.1))
    state = apply_gate(state, Gate("CNOT", (1, 0)))
    delta = 0.4
    p0, _ = outcome_probabilities(state, 1, delta)
    trials = 10_000
    zeros = sum(measure_in_basis(state, 1, delta, rng)[0] == 0 for _ in range(trials))
    sigma = np.sqrt(trials * p0 * (1 - p0))
    assert abs(zeros - trials * p0) <= 3 * sigma


def test_measurement_removes_wire(rng):
    bell = apply_gate(apply_gate(StateVector.basis([0, 0]), Gate("H", (0,))), Gate("CNOT", (0, 1)))
    b, post = measure_in_basis(bell, 0, 0, rng)
    assert post.wire_count == 1


def test_global_phase_examples():
    x, z, y = GATE_MATRICES["X"], GATE_MATRICES["Z"], GATE_MATRICES["Y"]
    assert equal_up_to_global_phase(x @ z, z @ x)
    assert not equal_up_to_global_phase(x, z)
    assert equal_up_to_global_phase(y, x @ z)


def test_fidelity_examples():
    zero, one = StateVector.basis([0]), StateVector.basis([1])
    assert fidelity(zero, zero) == pytest.approx(1)
    assert fidelity(zero, one) == pytest.approx(0)
    assert fidelity(zero, plus()) == pytest.approx(0.5)


def test_partial_trace_examples():
    prod = StateVector.basis([0]).tensor(plus())
    assert np.allclose(density_of(prod, [0]), np.diag([1, 0]))
    bell = apply_gate(apply_gate(StateVector.basis([0, 0]), Gate("H", (0,))), Gate("CNOT", (0, 1)))
    assert np.allclose(density_of(bell, [0]), np.eye(2) / 2)
    assert np.allclose(density_of(plus(), [0]), np.full((2, 2), 0.5))


def test_trace_distance_examples():
    rho = np.diag([0.3, 0.7]).astype(complex)
    assert trace_distance(rho, rho) == 0
    assert trace_distance(np.diag([1, 0]), np.diag([0, 1])) == pytest.approx(1)
    assert trace_distance(np.diag([1, 0]), np.eye(2) / 2) == pytest.approx(0.5)


def test_drop_entangled_wire_rejected():
    bell = apply_gate(apply_gate(StateVector.basis([0, 0]), Gate("H", (0,))), Gate("CNOT", (0, 1)))
    with pytest.raises(QuantumError):
        bell.drop_wires([1])


def test_owner_relabel_keeps_amplitudes():
    s = StateVector.basis([1, 0]).with_owner([0], "C")
    assert s.owner == ("C", "S") and s.owned_by("C") == [0]


def test_unnormalised_state_rejected():
    with pytest.raises(QuantumError):
        StateVector(np.array([1.0, 1.0], dtype=complex))


def test_qotp_twirl_single_qubit(rng):
    for _ in range(5):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        rho = np.outer(v, v.conj())
        avg = sum(
            np.linalg.matrix_power(GATE_MATRICES["X"], a) @ np.linalg.matrix_power(GATE_MATRICES["Z"], b) @ rho
            @ np.linalg.matrix_power(GATE_MATRICES["Z"], b) @ np.linalg.matrix_power(GATE_MATRICES["X"], a)
            for a in (0, 1) for b in (0, 1)
        ) / 4
        assert np.allclose(avg, np.eye(2) / 2, atol=1e-12)


kinds = st.sampled_from(["X", "Y", "Z", "H", "P", "R", "RZ", "CNOT", "CZ"])


@settings(max_examples=60, deadline=None)
@given(kinds=st.lists(kinds, min_size=1, max_size=12), seed=st.integers(0, 2**32 - 1))
def test_norm_preserved(kinds, seed):
    r = np.random.default_rng(seed)
    w = 3
    v = r.normal(size=2**w) + 1j * r.normal(size=2**w)
    state = StateVector(v / np.linalg.norm(v))
    for k in kinds:
        if k in ("CNOT", "CZ"):
            a, b = r.choice(w, size=2, replace=False)
            g = Gate(k, (int(a), int(b)))
        else:
            g = Gate(k, (int(r.integers(w)),), float(r.uniform(0, 6)))
        state = apply_gate(state, g)
        assert abs(state.norm() - 1) < 1e-12
    assert is_density_matrix(density_of(state, [0, 2]))
