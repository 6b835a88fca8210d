"""Universal-circuit protocol: C owns the data, T the program encoding, S the circuit.

Both C and T one-time-pad their inputs, S runs the public universal circuit on
the doubly encrypted registers, and C and T track their halves of the pad
through every gate.  Each R gate makes the wire visit C and then T, and costs
one AND-BOX call so neither learns the other's key bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .andbox import AndBox, IdealAndBox
from .keys import (
    PauliKey,
    RGateLocalBits,
    apply_qotp,
    combined_key,
    pad_matrix,
    update_key_clifford,
    update_key_r,
)
from .quantum import GATE_MATRICES, StateVector, apply_gate, apply_matrix
from .transport import BitSource, Network, ProtocolViolation, ScriptedBits, Transcript, party_streams
from .uqc import Circuit

_P = GATE_MATRICES["P"]


def _owned_by(state: StateVector, party: str, wires: Sequence[int]) -> None:
    bad = [w for w in wires if state.owner[w] != party]
    if bad:
        raise ProtocolViolation(f"wires {bad} are not held by {party}")


# -- step functions ------------------------------------------------------------

def client_encrypt_data(d: StateVector, key_c: PauliKey) -> StateVector:
    """C pads the data with the c-part of its key and hands it to T."""
    if d.wire_count != key_c.n:
        raise ValueError(f"data has {d.wire_count} wires, key expects {key_c.n}")
    _owned_by(d, "C", range(d.wire_count))
    return apply_qotp(d, key_c, range(key_c.n)).with_owner(range(key_c.n), "T")


def third_encrypt_data(ct: StateVector, key_t: PauliKey) -> StateVector:
    if ct.wire_count != key_t.n:
        raise ValueError(f"data has {ct.wire_count} wires, key expects {key_t.n}")
    _owned_by(ct, "T", range(ct.wire_count))
    return apply_qotp(ct, key_t, range(key_t.n)).with_owner(range(key_t.n), "S")


def third_encrypt_encoding(e: str, key_t: PauliKey) -> StateVector:
    """T prepares |e> (plus any zeroed workspace bits in ``e``) and pads it with its t-part."""
    m = key_t.size - key_t.n
    if len(e) != m:
        raise ValueError(f"encoding has {len(e)} bits, key t-part has {m}")
    state = StateVector.basis(e, owner="T")
    return apply_qotp(state, key_t, range(m), key_offset=key_t.n).with_owner(range(m), "C")


def client_encrypt_encoding(ct: StateVector, key_c: PauliKey) -> StateVector:
    m = key_c.size - key_c.n
    if ct.wire_count != m:
        raise ValueError(f"encoding register has {ct.wire_count} wires, key t-part has {m}")
    _owned_by(ct, "C", range(m))
    return apply_qotp(ct, key_c, range(m), key_offset=key_c.n).with_owner(range(m), "S")


def third_decrypt(phi: StateVector, key_t: PauliKey) -> StateVector:
    """T strips its pad from the data wires ``[0, n)`` and passes them to C."""
    wires = range(key_t.n)
    _owned_by(phi, "T", wires)
    return apply_qotp(phi, key_t, wires).with_owner(wires, "C")


def client_decrypt(phi: StateVector, key_c: PauliKey) -> StateVector:
    wires = range(key_c.n)
    _owned_by(phi, "C", wires)
    return apply_qotp(phi, key_c, wires)


def r_detour_operator(x_bit: int, flip: int, phase: int) -> np.ndarray:
    """X^flip Z^phase P^x_bit, the operator a key holder applies during the R detour."""
    p = _P if x_bit else np.eye(2, dtype=complex)
    return pad_matrix(flip, phase) @ p


# -- parties -------------------------------------------------------------------

@dataclass
class KeyHolder:
    """State of C or T: current key, position in the circuit, private randomness."""

    id: str
    source: BitSource | ScriptedBits
    key: PauliKey | None = None
    gate_cursor: int = 0
    initial_key: PauliKey | None = None
    pending: tuple[int, int] | None = None  # (wire, random bits) during an R detour

    def new_round(self, n: int, m: int) -> PauliKey:
        bits = self.source.bits(2 * (n + m))
        self.key = PauliKey(bits[: n + m], bits[n + m:], n)
        self.initial_key = self.key
        self.gate_cursor = 0
        return self.key

    def on_gate(self, gate, j: int) -> None:
        if j != self.gate_cursor + 1:
            raise ProtocolViolation(f"{self.id} expected gate {self.gate_cursor + 1}, got {j}")
        if gate.kind != "R":
            self.key = update_key_clifford(self.key, gate)
            self.gate_cursor = j

    def detour_apply(self, state: StateVector, w: int) -> tuple[StateVector, int, int]:
        """Apply X^a Z^b P^{x(w)} with fresh a, b; returns (state, a, b)."""
        _owned_by(state, self.id, [w])
        a, b = self.source.bits(2)
        x, _ = self.key.at(w)
        self.pending = (w, a, b)
        return apply_matrix(state, r_detour_operator(x, a, b), w), a, b

    def finish_r(self, j: int, share: int) -> None:
        if self.pending is None:
            raise ProtocolViolation(f"{self.id} received an AND-BOX share outside an R detour")
        w, a, b = self.pending
        if self.id == "C":
            local = RGateLocalBits(r=a, r_prime=b, s=0, s_prime=0, alpha=share, beta=0)
        else:
            local = RGateLocalBits(r=0, r_prime=0, s=a, s_prime=b, alpha=0, beta=share)
        self.key = update_key_r(self.key, w, local, self.id)
        self.pending = None
        self.gate_cursor = j


@dataclass
class Server:
    """S holds no key material; it only runs gates and relays wires."""

    id: str = "S"
    gate_cursor: int = 0


@dataclass
class RoundRecord:
    """Test-mode introspection of one round."""

    encoding: str
    initial_key_c: PauliKey
    initial_key_t: PauliKey
    final_key_c: PauliKey
    final_key_t: PauliKey
    ciphertext: StateVector  # what S holds before evaluating
    post_evaluation: StateVector  # what S holds after the last gate
    detours: list[tuple[int, int, RGateLocalBits]] = field(default_factory=list)  # (j, wire, bits)


class Protocol2Session:
    """Drives C, S and T through the protocol for one or more encodings.

    The orchestrator owns the single global state; sending a qubit relabels
    its owner.  ``record_notify=False`` drops the public per-gate notices from
    the transcript, which keeps large analysis sweeps light.
    """

    def __init__(
        self,
        circuit: Circuit,
        seed: int = 0,
        *,
        client_source=None,
        third_source=None,
        andbox: AndBox | None = None,
        record_notify: bool = True,
    ):
        self.circuit = circuit
        streams = party_streams(seed)
        self.client = KeyHolder("C", client_source or BitSource(streams["C"]))
        self.third = KeyHolder("T", third_source or BitSource(streams["T"]))
        self.server = Server()
        self.andbox = andbox if andbox is not None else IdealAndBox(streams["ANDBOX"])
        self.transcript = Transcript()
        self.net = Network(self.transcript, record_notify=record_notify)
        self.state: StateVector | None = None
        self.rounds: list[RoundRecord] = []
        self._round = 0
        self._detours: list = []

    @property
    def n(self) -> int:
        return self.circuit.n

    @property
    def t_width(self) -> int:
        return self.circuit.m + self.circuit.workspace

    def _tag(self, step: str) -> str:
        return f"round{self._round}.{step}"

    # step 1 and 2
    def encrypt_inputs(self, d: StateVector, e: str) -> None:
        n, net = self.n, self.net
        if d.wire_count != n:
            raise ValueError(f"data has {d.wire_count} wires, circuit expects {n}")
        if len(e) != self.circuit.m:
            raise ValueError(f"encoding has {len(e)} bits, circuit expects {self.circuit.m}")
        kc = self.client.new_round(n, self.t_width)
        kt = self.third.new_round(n, self.t_width)

        data = d.with_owner(range(n), "C")
        data = apply_qotp(data, kc, range(n))
        data = net.send_quantum(data, "C", "T", range(n), self._tag("step1.encrypt-data"))
        data = third_encrypt_data(data, kt).with_owner(range(n), "T")
        data = net.send_quantum(data, "T", "S", range(n), self._tag("step1.encrypt-data"))

        padded = e + "0" * self.circuit.workspace
        enc = StateVector.basis(padded, owner="T")
        enc = apply_qotp(enc, kt, range(self.t_width), key_offset=n)
        enc = net.send_quantum(enc, "T", "C", range(self.t_width), self._tag("step2.encrypt-encoding"))
        enc = client_encrypt_encoding(enc, kc).with_owner(range(self.t_width), "C")
        enc = net.send_quantum(enc, "C", "S", range(self.t_width), self._tag("step2.encrypt-encoding"))

        self.state = data.tensor(enc)
        self.server.gate_cursor = 0

    # step 3 and 4
    def server_evaluate(self) -> None:
        total = self.circuit.wire_count
        _owned_by(self.state, "S", range(total))
        if self.server.gate_cursor != 0:
            raise ProtocolViolation("evaluation already started")
        tag = self._tag("step3.gate")
        for j, gate in enumerate(self.circuit.gates, 1):
            self.state = apply_gate(self.state, gate)
            self.server.gate_cursor = j
            self.net.notify("S", gate.kind, gate.wires, f"{tag}.{j}")
            self.client.on_gate(gate, j)
            self.third.on_gate(gate, j)
            if gate.kind == "R":
                self.r_gate_detour(gate.wires[0], j)

    def r_gate_detour(self, w: int, j: int) -> None:
        net, tag = self.net, self._tag(f"step3.r-detour.{j}")
        kc_x = self.client.key.at(w)[0]
        kt_x = self.third.key.at(w)[0]
        self.state = net.send_quantum(self.state, "S", "C", [w], tag)
        self.state, r, r_prime = self.client.detour_apply(self.state, w)
        self.state = net.send_quantum(self.state, "C", "T", [w], tag)
        self.state, s, s_prime = self.third.detour_apply(self.state, w)
        self.state = net.send_quantum(self.state, "T", "S", [w], tag)

        a, b = r ^ kc_x, kt_x
        net.send_classical("C", "ANDBOX", "andbox-input", [a], tag)
        net.send_classical("T", "ANDBOX", "andbox-input", [b], tag)
        alpha, beta = self.andbox.call(a, b)
        net.send_classical("ANDBOX", "C", "andbox-share", [alpha], tag)
        net.send_classical("ANDBOX", "T", "andbox-share", [beta], tag)
        self.client.finish_r(j, alpha)
        self.third.finish_r(j, beta)
        self._detours.append((j, w, RGateLocalBits(r, r_prime, s, s_prime, alpha, beta)))

    # step 5
    def decrypt_result(self) -> StateVector:
        n, net = self.n, self.net
        if self.client.gate_cursor != self.circuit.k or self.third.gate_cursor != self.circuit.k:
            raise ProtocolViolation("decryption requested before every gate was processed")
        state = net.send_quantum(self.state, "S", "T", range(n), self._tag("step5.decrypt"))
        state = third_decrypt(state, self.third.key).with_owner(range(n), "T")
        state = net.send_quantum(state, "T", "C", range(n), self._tag("step5.decrypt"))
        state = client_decrypt(state, self.client.key)
        self.state = state
        # S discards its spent encoding and workspace wires
        return state.drop_wires(range(n, self.circuit.wire_count))

    def run_round(self, d: StateVector, e: str) -> StateVector:
        self._detours = []
        self.encrypt_inputs(d, e)
        ciphertext = self.state
        self.server_evaluate()
        post = self.state
        result = self.decrypt_result()
        self.rounds.append(RoundRecord(
            e, self.client.initial_key, self.third.initial_key, self.client.key, self.third.key,
            ciphertext, post, self._detours,
        ))
        self._round += 1
        return result

    def run(self, d: StateVector, encodings: Sequence[str]) -> tuple[StateVector, Transcript]:
        if not encodings:
            raise ValueError("at least one encoding is required")
        data = d.with_owner(range(d.wire_count), "C")
        for e in encodings:
            # C keeps the plaintext between rounds and re-pads it with the next round's key
            data = self.run_round(data, e)
        self.transcript.andbox_log = list(self.andbox.log)
        self.transcript.final_owner = data.owner
        return data, self.transcript


def run_session(
    d: StateVector,
    encodings: Sequence[str],
    circuit: Circuit,
    seed: int = 0,
    **kwargs,
) -> tuple[StateVector, Transcript]:
    return Protocol2Session(circuit, seed, **kwargs).run(d, encodings)


def strip_combined_key(state: StateVector, kc: PauliKey, kt: PauliKey) -> StateVector:
    """Undo X^{C^k+T^k} Z^{C^k+T^k} on every wire (used to check the evaluated form)."""
    return apply_qotp(state, combined_key(kc, kt), range(state.wire_count))
