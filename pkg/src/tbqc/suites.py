"""Invariant suites shared by ``tbqc verify`` and the acceptance tests.

Every suite returns a list of :class:`Check` rows, one per property.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .andbox import IdealAndBox
from .keys import PauliKey, RGateLocalBits, pad_matrix, update_key_clifford, update_key_r
from .protocol1 import (
    BrickworkLayout,
    Protocol1Session,
    collusion_break_demo,
    mbqc_oracle,
    named_pattern,
    server_alone_input_view,
)
from .protocol2 import Protocol2Session, r_detour_operator
from .quantum import GATE_MATRICES, Gate, StateVector, apply_gates, equal_up_to_global_phase, fidelity, trace_distance
from .uqc import Instruction, OPCODES, Program, build_uqc, encode_program, verify_definition5

PHASE_TOL = 1e-12


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


def _timed(name, fn) -> Check:
    t0 = time.perf_counter()
    ok, detail = fn()
    return Check(name, bool(ok), detail, time.perf_counter() - t0)


def _proportional(a: np.ndarray, b: np.ndarray, tol: float = PHASE_TOL) -> bool:
    return equal_up_to_global_phase(a.reshape(-1), b.reshape(-1), tol)


def _two_layer(kc: PauliKey, kt: PauliKey, wires: int) -> np.ndarray:
    """Full pad T·C (C applied first) as a 2^wires matrix, wire 0 least significant."""
    out = np.eye(1, dtype=complex)
    for w in range(wires):
        single = pad_matrix(*kt.at(w)) @ pad_matrix(*kc.at(w))
        out = np.kron(single, out)
    return out


# -- key algebra ----------------------------------------------------------------

def key_algebra_checks() -> list[Check]:
    """G·pad(C,T) equals pad(C',T')·G up to phase for every key assignment."""
    def single(kind):
        def run():
            g = GATE_MATRICES[kind]
            bad = 0
            for bits in itertools.product((0, 1), repeat=4):
                kc = PauliKey((bits[0],), (bits[1],), 1)
                kt = PauliKey((bits[2],), (bits[3],), 1)
                gate = Gate(kind, (0,))
                lhs = g @ _two_layer(kc, kt, 1)
                rhs = _two_layer(update_key_clifford(kc, gate), update_key_clifford(kt, gate), 1) @ g
                bad += not _proportional(lhs, rhs)
            return bad == 0, f"16 assignments, {bad} mismatches"
        return run

    def cnot():
        bad = 0
        for bits in itertools.product((0, 1), repeat=8):
            kc = PauliKey(bits[0:2], bits[2:4], 2)
            kt = PauliKey(bits[4:6], bits[6:8], 2)
            for wires in ((0, 1), (1, 0)):
                gate = Gate("CNOT", wires)
                g = gate_matrix_2(gate)
                lhs = g @ _two_layer(kc, kt, 2)
                rhs = _two_layer(update_key_clifford(kc, gate), update_key_clifford(kt, gate), 2) @ g
                bad += not _proportional(lhs, rhs)
        return bad == 0, f"256 assignments x 2 orientations, {bad} mismatches"

    checks = [_timed(f"key-update {k}", single(k)) for k in ("X", "Y", "Z", "H", "P")]
    checks.append(_timed("key-update CNOT", cnot))
    return checks


def gate_matrix_2(gate: Gate) -> np.ndarray:
    """4x4 matrix of a two-wire gate acting on wires {0, 1}."""
    cols = []
    for v in range(4):
        st = StateVector.basis([(v >> 0) & 1, (v >> 1) & 1])
        cols.append(apply_gates(st, [gate]).amplitudes)
    return np.stack(cols, axis=1)


def r_identity_check() -> Check:
    """Detours after R on a doubly padded wire leave R under the updated pads."""
    def run():
        r_gate = GATE_MATRICES["R"]
        bad = total = 0
        for cx, cz, tx, tz, r, rp, s, sp, alpha in itertools.product((0, 1), repeat=9):
            beta = alpha ^ ((r ^ cx) & tx)
            kc = PauliKey((cx,), (cz,), 1)
            kt = PauliKey((tx,), (tz,), 1)
            lhs = r_detour_operator(tx, s, sp) @ r_detour_operator(cx, r, rp) @ r_gate @ _two_layer(kc, kt, 1)
            kc2 = update_key_r(kc, 0, RGateLocalBits(r, rp, 0, 0, alpha, 0), "C")
            kt2 = update_key_r(kt, 0, RGateLocalBits(0, 0, s, sp, 0, beta), "T")
            rhs = _two_layer(kc2, kt2, 1) @ r_gate
            bad += not _proportional(lhs, rhs)
            total += 1
        return bad == 0, f"{total} assignments (256 key/detour bits x 2 shares), {bad} mismatches"
    return _timed("R-gate detour identity", run)


def key_algebra_suite() -> list[Check]:
    return key_algebra_checks() + [r_identity_check()]


# -- universal circuit ----------------------------------------------------------

def uqc_suite(configs=((1, 1), (2, 1)), mutations: int = 8, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []
    for n, slots in configs:
        circuit = build_uqc(n, slots)

        def exhaustive(circuit=circuit, n=n, slots=slots):
            rep = verify_definition5(circuit, n, slots)
            return rep.passed, f"{rep.cases} cases, {len(rep.failures)} failures, k={circuit.k}, wires={circuit.wire_count}"

        checks.append(_timed(f"universal circuit n={n} slots={slots}", exhaustive))

        def mutation(circuit=circuit, n=n, slots=slots):
            picks = rng.choice(circuit.k, size=min(mutations, circuit.k), replace=False)
            caught = sum(not verify_definition5(circuit.without_gate(int(i)), n, slots, fail_fast=True).passed for i in picks)
            return caught == len(picks), f"{caught}/{len(picks)} single-gate deletions detected"

        checks.append(_timed(f"mutation detection n={n} slots={slots}", mutation))
    return checks


# -- twirl ------------------------------------------------------------------------

def twirl_suite() -> list[Check]:
    from .analysis import blindness_twirl_check

    def one_wire():
        s = 1 / np.sqrt(2)
        states = {"0": [1, 0], "+": [s, s], "+i": [s, 1j * s]}
        worst = 0.0
        for vec in states.values():
            v = np.array(vec, dtype=complex)
            rho = sum(
                pad_matrix(a, b) @ np.outer(v, v.conj()) @ pad_matrix(a, b).conj().T
                for a in (0, 1) for b in (0, 1)
            ) / 4
            worst = max(worst, float(np.abs(rho - np.eye(2) / 2).max()))
        return worst < 1e-15, f"max entry deviation {worst:.1e}"

    def exhaustive():
        rep = blindness_twirl_check([("0", "0"), ("1", "0"), ("0", "1"), ("1", "1")])
        worst = max(v for row in rep.distances for k, v in row.items() if k in ("to_maximally_mixed", "distance"))
        return rep.passed, f"n=1 m=1, {rep.parameters['terms']} key pairs, max distance {worst:.1e}"

    def negative():
        rep = blindness_twirl_check([("0", "0")], key_space="fixed")
        d = rep.distances[0]["to_maximally_mixed"]
        return d > 0.4, f"fixed key distance {d:.3f}"

    return [
        _timed("one-wire twirl is I/2", one_wire),
        _timed("exhaustive two-layer twirl", exhaustive),
        _timed("fixed-key control has power", negative),
    ]


# -- protocols ----------------------------------------------------------------------

def random_program(n: int, length: int, rng: np.random.Generator) -> Program:
    out = []
    for _ in range(length):
        op = OPCODES[int(rng.integers(1, len(OPCODES)))]
        if op == "CNOT" and n < 2:
            op = "H"
        a = int(rng.integers(0, n))
        b = (a + 1 + int(rng.integers(0, n - 1))) % n if op == "CNOT" else 0
        out.append(Instruction(op, a, b))
    return Program(tuple(out), n)


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(v / np.linalg.norm(v))


def protocol2_suite(sessions: int = 200, seed: int = 0, max_n: int = 2, max_rounds: int = 3) -> list[Check]:
    """Randomised end-to-end sessions checked against direct simulation of the program."""
    rng = np.random.default_rng(seed)
    circuits = {n: build_uqc(n, 1) for n in range(1, max_n + 1)}

    def run():
        worst = 1.0
        calls_ok = True
        for i in range(sessions):
            n = int(rng.integers(1, max_n + 1))
            rounds = int(rng.integers(1, max_rounds + 1))
            prog = random_program(n, rounds, rng)
            d = random_state(n, rng)
            encs = [encode_program(b) for b in prog.blocks(1)]
            sess = Protocol2Session(circuits[n], seed=int(rng.integers(2**63)), record_notify=False)
            out, tr = sess.run(d, encs)
            want = apply_gates(d, prog.gates())
            worst = min(worst, fidelity(out, want))
            calls_ok &= len(tr.andbox_log) == circuits[n].r_count * rounds
        return abs(worst - 1) <= 1e-9 and calls_ok, f"{sessions} sessions, min fidelity {worst:.12f}"

    return [_timed("protocol 2 correctness", run)]


def andbox_suite(calls: int = 10_000, programs: int = 50, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)

    def exhaustive():
        box = IdealAndBox(rng)
        bad = sum((al ^ be) != (a & b) for a in (0, 1) for b in (0, 1) for _ in range(64) for al, be in [box.call(a, b)])
        return bad == 0, f"256 calls over 4 inputs, {bad} violations"

    def uniform():
        box = IdealAndBox(rng)
        ones = sum(box.call(int(rng.integers(2)), int(rng.integers(2)))[0] for _ in range(calls))
        sigma = np.sqrt(calls * 0.25)
        dev = abs(ones - calls / 2) / sigma
        return dev <= 3, f"{ones}/{calls} alpha=1, {dev:.2f} sigma"

    def counting():
        circuits = {n: build_uqc(n, 1) for n in (1, 2)}
        bad = 0
        for _ in range(programs):
            n = int(rng.integers(1, 3))
            rounds = int(rng.integers(1, 4))
            prog = random_program(n, rounds, rng)
            encs = [encode_program(b) for b in prog.blocks(1)]
            sess = Protocol2Session(circuits[n], seed=int(rng.integers(2**63)), record_notify=False)
            _, tr = sess.run(StateVector.basis([0] * n), encs)
            bad += len(tr.andbox_log) != circuits[n].r_count * rounds
        return bad == 0, f"{programs} programs, {bad} count mismatches"

    return [
        _timed("AND-BOX shares xor to a.b", exhaustive),
        _timed("AND-BOX alpha uniform", uniform),
        _timed("AND-BOX calls equal R count", counting),
    ]


def protocol1_suite(seeds: int = 100, max_columns: int = 4) -> list[Check]:
    s = 1 / np.sqrt(2)
    inputs = {"0": StateVector.basis([0]), "1": StateVector.basis([1]), "+": StateVector(np.array([s, s]))}

    def correctness():
        worst = 1.0
        runs = 0
        for cols in range(1, max_columns + 1):
            layout = BrickworkLayout.linear(cols)
            for name in ("identity", "x"):
                pattern = named_pattern(name, cols)
                for label, st in inputs.items():
                    want = mbqc_oracle(st, layout, pattern)
                    for seed in range(seeds):
                        out = Protocol1Session(layout, pattern, seed).run(st).output
                        worst = min(worst, fidelity(out, want))
                        runs += 1
        return abs(worst - 1) <= 1e-9, f"{runs} runs, min fidelity {worst:.12f}"

    def collusion():
        hits = total = 0
        for bit in (0, 1):
            for seed in range(seeds):
                layout = BrickworkLayout.linear(2)
                res = Protocol1Session(layout, named_pattern("identity", 2), seed).run(StateVector.basis([bit]))
                brk = collusion_break_demo(res)
                hits += brk.recovered_input == [bit]
                total += 1
        return hits == total, f"{hits}/{total} basis inputs recovered"

    def server_alone():
        worst = 0.0
        for st in inputs.values():
            worst = max(worst, trace_distance(server_alone_input_view(st), np.eye(2) / 2))
        return worst <= 1e-10, f"max distance to I/2 {worst:.1e}"

    return [
        _timed("protocol 1 correctness", correctness),
        _timed("S+T collusion breaks protocol 1", collusion),
        _timed("S alone sees I/2", server_alone),
    ]


SUITES = {
    "key-algebra": key_algebra_suite,
    "uqc": uqc_suite,
    "twirl": twirl_suite,
    "protocol1": protocol1_suite,
    "protocol2": protocol2_suite,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for fn in SUITES.values() for c in fn()] + andbox_suite()
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name]()
