"""Instruction-dispatch universal circuit over {X, Y, Z, H, P, CNOT, R}.

A program is a list of fixed-width instruction words.  Each word is
``opcode (3 bits) | wire_a | wire_b`` with ``ceil(log2 n)`` bits per wire
field, most significant bit first.  The universal circuit reads one word per
slot from the encoding register and, for every instruction value, applies the
matching gate to the data wires under a multi-control on that slot's bits.

Multi-controlled gates are expanded into the seven allowed gate kinds.  Exact
Clifford+R synthesis of these gates needs clean scratch wires, so the circuit
carries a workspace register after the encoding register; it must enter in
|0...0> and is returned there.

Wire layout: data ``[0, n)``, encoding ``[n, n+m)``, workspace ``[n+m, n+m+a)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .quantum import MAX_WIRES, Gate, StateVector, apply_gates, apply_gates_batch

OPCODES = ("NOP", "X", "Z", "H", "P", "R", "CNOT", "Y")
OPCODE_BITS = 3
ALLOWED_KINDS = frozenset({"X", "Y", "Z", "H", "P", "CNOT", "R"})


class ProgramError(ValueError):
    """Malformed instruction, program text or encoding."""


class CircuitSizeError(ValueError):
    """Requested universal circuit exceeds the simulator's wire limit."""


def wire_bits(n: int) -> int:
    return (n - 1).bit_length()


def instruction_width(n: int) -> int:
    return OPCODE_BITS + 2 * wire_bits(n)


@dataclass(frozen=True)
class Instruction:
    opcode: str
    wire_a: int = 0
    wire_b: int = 0

    def __post_init__(self):
        op = self.opcode.upper()
        if op not in OPCODES:
            raise ProgramError(f"unknown opcode {self.opcode!r}")
        object.__setattr__(self, "opcode", op)

    @property
    def is_nop(self) -> bool:
        return self.opcode == "NOP" or (self.opcode == "CNOT" and self.wire_a == self.wire_b)

    def gates(self) -> list[Gate]:
        """The instruction's action on the data register."""
        if self.is_nop:
            return []
        if self.opcode == "CNOT":
            return [Gate("CNOT", (self.wire_a, self.wire_b))]
        return [Gate(self.opcode, (self.wire_a,))]

    def word(self, n: int) -> str:
        wb = wire_bits(n)
        for w in (self.wire_a, self.wire_b):
            if not 0 <= w < n:
                raise ProgramError(f"wire {w} out of range for {n} data wires")
        code = format(OPCODES.index(self.opcode), f"0{OPCODE_BITS}b")
        if wb == 0:
            return code
        return code + format(self.wire_a, f"0{wb}b") + format(self.wire_b, f"0{wb}b")

    def __str__(self):
        if self.opcode == "NOP":
            return "NOP"
        if self.opcode == "CNOT":
            return f"CNOT {self.wire_a} {self.wire_b}"
        return f"{self.opcode} {self.wire_a}"


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instruction, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.n < 1:
            raise ProgramError("a program needs at least one data wire")

    @property
    def slots(self) -> int:
        return len(self.instructions)

    @property
    def encoding_width(self) -> int:
        return self.slots * instruction_width(self.n)

    def gates(self) -> list[Gate]:
        return [g for ins in self.instructions for g in ins.gates()]

    def blocks(self, slots: int) -> list["Program"]:
        """Split into consecutive encodings of ``slots`` instructions, NOP-padded."""
        if slots < 1:
            raise ProgramError("slots must be positive")
        ins = list(self.instructions)
        if not ins:
            return []
        ins += [Instruction("NOP")] * (-len(ins) % slots)
        return [Program(tuple(ins[i:i + slots]), self.n) for i in range(0, len(ins), slots)]


def encode_program(prog: Program) -> str:
    return "".join(ins.word(prog.n) for ins in prog.instructions)


def decode_encoding(bits: str, n: int, slots: int, strict: bool = True) -> Program | None:
    """Inverse of :func:`encode_program`.

    Words naming a wire >= n are invalid: ``strict`` raises, otherwise None is returned.
    """
    width = instruction_width(n)
    if len(bits) != width * slots or set(bits) - {"0", "1"}:
        raise ProgramError(f"encoding {bits!r} is not {width * slots} bits")
    wb = wire_bits(n)
    out = []
    for s in range(slots):
        word = bits[s * width:(s + 1) * width]
        opcode = OPCODES[int(word[:OPCODE_BITS], 2)]
        wa = int(word[OPCODE_BITS:OPCODE_BITS + wb], 2) if wb else 0
        wbv = int(word[OPCODE_BITS + wb:], 2) if wb else 0
        if wa >= n or wbv >= n:
            if strict:
                raise ProgramError(f"word {word} names a wire outside [0, {n})")
            return None
        out.append(Instruction(opcode, wa, wbv))
    return Program(tuple(out), n)


def parse_program(text: str, n: int) -> Program:
    """Parse ``OPCODE wire_a [wire_b]`` lines; '#' starts a comment."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        op = parts[0].upper()
        try:
            args = [int(p) for p in parts[1:]]
        except ValueError as exc:
            raise ProgramError(f"line {lineno}: bad wire index in {raw!r}") from exc
        if op not in OPCODES:
            raise ProgramError(f"line {lineno}: unknown opcode {parts[0]!r}")
        need = {"NOP": (0, 2), "CNOT": (2, 2)}.get(op, (1, 2))
        if not need[0] <= len(args) <= need[1]:
            raise ProgramError(f"line {lineno}: {op} takes {need[0]} wire(s), got {len(args)}")
        if any(not 0 <= a < n for a in args):
            raise ProgramError(f"line {lineno}: wire out of range for {n} data wires")
        args += [0] * (2 - len(args))
        out.append(Instruction(op, args[0], args[1]))
    return Program(tuple(out), n)


def format_program(prog: Program) -> str:
    return "".join(f"{ins}\n" for ins in prog.instructions)


@dataclass(frozen=True)
class Circuit:
    gates: tuple[Gate, ...]
    n: int
    m: int
    workspace: int = 0
    slots: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))

    @property
    def k(self) -> int:
        return len(self.gates)

    @property
    def wire_count(self) -> int:
        return self.n + self.m + self.workspace

    @property
    def r_count(self) -> int:
        return sum(g.kind == "R" for g in self.gates)

    def without_gate(self, index: int) -> "Circuit":
        gates = self.gates[:index] + self.gates[index + 1:]
        return Circuit(gates, self.n, self.m, self.workspace, self.slots)


# -- synthesis ---------------------------------------------------------------

def _rdg(w: int) -> list[Gate]:
    # R^dagger = Z P R, all diagonal
    return [Gate("Z", (w,)), Gate("P", (w,)), Gate("R", (w,))]


def _pdg(w: int) -> list[Gate]:
    return [Gate("Z", (w,)), Gate("P", (w,))]


def toffoli(a: int, b: int, c: int) -> list[Gate]:
    """Exact Clifford+R Toffoli with controls a, b and target c."""
    H, R, CX = (lambda w: Gate("H", (w,))), (lambda w: Gate("R", (w,))), (lambda x, y: Gate("CNOT", (x, y)))
    return [
        H(c), CX(b, c), *_rdg(c), CX(a, c), R(c), CX(b, c), *_rdg(c), CX(a, c),
        R(b), R(c), H(c), CX(a, b), R(a), *_rdg(b), CX(a, b),
    ]


def _controlled_1q(kind: str, c: int, t: int, workspace: Sequence[int]) -> list[Gate]:
    if kind == "X":
        return [Gate("CNOT", (c, t))]
    if kind == "Z":
        return [Gate("H", (t,)), Gate("CNOT", (c, t)), Gate("H", (t,))]
    if kind == "Y":
        return [*_pdg(t), Gate("CNOT", (c, t)), Gate("P", (t,))]
    if kind == "H":
        return [
            Gate("P", (t,)), Gate("H", (t,)), Gate("R", (t,)), Gate("CNOT", (c, t)),
            *_rdg(t), Gate("H", (t,)), *_pdg(t),
        ]
    if kind == "P":
        return [Gate("R", (c,)), Gate("R", (t,)), Gate("CNOT", (c, t)), *_rdg(t), Gate("CNOT", (c, t))]
    if kind == "R":
        if not workspace:
            raise ProgramError("controlled-R needs one workspace wire")
        anc = workspace[0]
        return [*toffoli(c, t, anc), Gate("R", (anc,)), *toffoli(c, t, anc)]
    raise ProgramError(f"cannot control gate kind {kind}")


def workspace_needed(kind: str, controls: int) -> int:
    """Scratch wires used by :func:`decompose_multicontrolled`."""
    if kind == "CNOT":
        kind, controls = "X", controls + 1
    if controls == 0:
        return 0
    if kind == "X":
        return max(controls - 2, 0)
    chain = controls - 1
    return chain + (1 if kind == "R" else 0)


def decompose_multicontrolled(
    gate: Gate,
    controls: Sequence[int],
    polarity: Sequence[int] | None = None,
    workspace: Sequence[int] = (),
) -> list[Gate]:
    """Expand ``gate`` controlled on ``controls`` into the seven allowed kinds.

    ``polarity[i] == 0`` makes control i fire on |0> (sandwiched by X).
    Workspace wires must be |0> on entry and are returned to |0>.
    """
    if gate.kind not in ALLOWED_KINDS:
        raise ProgramError(f"unsupported gate kind {gate.kind}")
    controls = list(controls)
    polarity = [1] * len(controls) if polarity is None else list(polarity)
    if len(polarity) != len(controls):
        raise ProgramError("polarity and controls differ in length")
    busy = set(controls) | set(gate.wires)
    if len(set(controls)) != len(controls) or set(controls) & set(gate.wires):
        raise ProgramError("controls must be distinct and disjoint from the gate's wires")
    workspace = list(workspace)
    if set(workspace) & busy:
        raise ProgramError("workspace overlaps the controls or the target")
    if len(workspace) < workspace_needed(gate.kind, len(controls)):
        raise ProgramError(
            f"{gate.kind} with {len(controls)} controls needs "
            f"{workspace_needed(gate.kind, len(controls))} workspace wires"
        )

    kind, target = gate.kind, gate.wires[-1]
    if kind == "CNOT":
        kind = "X"
        controls.append(gate.wires[0])
        polarity.append(1)

    flips = [Gate("X", (c,)) for c, p in zip(controls, polarity) if not p]
    return flips + _positive_controlled(kind, controls, target, workspace) + flips


def _positive_controlled(kind: str, controls: list[int], t: int, workspace: list[int]) -> list[Gate]:
    k = len(controls)
    if k == 0:
        return [Gate(kind, (t,))]
    if k == 1:
        return _controlled_1q(kind, controls[0], t, workspace)
    if k == 2 and kind == "X":
        return toffoli(controls[0], controls[1], t)
    if kind == "Z":
        return [Gate("H", (t,)), *_positive_controlled("X", controls, t, workspace), Gate("H", (t,))]

    # compute the AND of all controls into a chain of workspace wires
    chain_len = k - 2 if kind == "X" else k - 1
    chain = workspace[:chain_len]
    compute: list[Gate] = []
    acc = controls[0]
    for i in range(chain_len):
        compute += toffoli(acc, controls[i + 1], chain[i])
        acc = chain[i]
    if kind == "X":
        middle = toffoli(acc, controls[-1], t)
    else:
        middle = _controlled_1q(kind, acc, t, workspace[chain_len:])
    uncompute = [g for block in reversed(_blocks(compute)) for g in block]
    return compute + middle + uncompute


def _blocks(gates: list[Gate]) -> list[list[Gate]]:
    # Toffoli blocks are self-inverse, so uncomputation just replays them in reverse order
    size = len(toffoli(0, 1, 2))
    return [gates[i:i + size] for i in range(0, len(gates), size)]


def _branches(n: int) -> list[tuple[Instruction, int]]:
    """Non-NOP instruction values with the number of word bits they depend on."""
    wb = wire_bits(n)
    out = []
    for op in OPCODES:
        if op == "NOP":
            continue
        if op == "CNOT":
            out += [(Instruction(op, a, b), OPCODE_BITS + 2 * wb) for a in range(n) for b in range(n) if a != b]
        else:
            # wire_b is ignored by single-wire opcodes, so it is not a control
            out += [(Instruction(op, a), OPCODE_BITS + wb) for a in range(n)]
    return out


def uqc_workspace(n: int) -> int:
    return max(workspace_needed(ins.opcode, used) for ins, used in _branches(n))


def build_uqc(n: int, slots: int) -> Circuit:
    if n < 1 or slots < 1:
        raise ProgramError("n and slots must be positive")
    width = instruction_width(n)
    m = slots * width
    a = uqc_workspace(n)
    if n + m + a > MAX_WIRES:
        raise CircuitSizeError(f"universal circuit needs {n + m + a} wires (limit {MAX_WIRES})")
    workspace = list(range(n + m, n + m + a))
    gates: list[Gate] = []
    for s in range(slots):
        base = n + s * width
        for ins, used in _branches(n):
            word = ins.word(n)[:used]
            controls = [base + j for j in range(used)]
            polarity = [int(b) for b in word]
            (target,) = ins.gates()
            gates += decompose_multicontrolled(target, controls, polarity, workspace)
    return Circuit(tuple(gates), n, m, a, slots)


# -- verification ------------------------------------------------------------

@dataclass
class Definition5Report:
    n: int
    slots: int
    cases: int = 0
    failures: list[tuple[str, str, float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.cases > 0 and not self.failures


def register_state(data: StateVector, encoding: str, workspace: int) -> StateVector:
    """|data> ⊗ |encoding> ⊗ |0...0> with encoding bit i on wire n+i."""
    bits = [int(b) for b in encoding] + [0] * workspace
    return data.tensor(StateVector.basis(bits)) if bits else data


def apply_program(data: StateVector, prog: Program) -> StateVector:
    return apply_gates(data, prog.gates())


def valid_encodings(n: int, slots: int) -> list[str]:
    m = slots * instruction_width(n)
    out = []
    for v in range(2**m):
        bits = format(v, f"0{m}b") if m else ""
        if decode_encoding(bits, n, slots, strict=False) is not None:
            out.append(bits)
    return out


def verify_definition5(
    circuit: Circuit, n: int, slots: int, tol: float = 1e-9, fail_fast: bool = False
) -> Definition5Report:
    """Check C_U(|d>|e>) = (U_e|d>)|e> for every basis d and every valid encoding e.

    Besides the per-case fidelity, all outputs must match under one shared
    global phase.  That makes the check cover superposed data and superposed
    encodings too, i.e. C_U acts as the coherent controlled-U_e.
    All cases are simulated together as columns of one array.
    ``fail_fast`` only trims the failure list to its first entry.
    """
    report = Definition5Report(n, slots)
    labels, inputs, wants = [], [], []
    for e in valid_encodings(n, slots):
        prog = decode_encoding(e, n, slots)
        for d in range(2**n):
            dbits = [(d >> i) & 1 for i in range(n)]
            data = StateVector.basis(dbits)
            labels.append(("".join(map(str, dbits)), e))
            inputs.append(register_state(data, e, circuit.workspace).amplitudes)
            wants.append(register_state(apply_program(data, prog), e, circuit.workspace).amplitudes)
    if not inputs:
        return report
    outs = apply_gates_batch(np.stack(inputs, axis=1), circuit.gates)
    wants_arr = np.stack(wants, axis=1)
    overlaps = np.einsum("ij,ij->j", wants_arr.conj(), outs)
    report.cases = len(labels)
    for (dbits, e), ov in zip(labels, overlaps):
        f = float(abs(ov) ** 2)
        if abs(f - 1) > tol:
            report.failures.append((dbits, e, f))
    shared = abs(overlaps.sum()) / len(labels)
    if abs(shared - 1) > tol:
        report.failures.append(("*", "*", float(shared)))
    if fail_fast:
        del report.failures[1:]
    return report


def run_chain(data: StateVector, encodings: Iterable[str], circuit: Circuit) -> StateVector:
    """Apply the universal circuit once per encoding, discarding each spent encoding register."""
    n = circuit.n
    extra = list(range(n, circuit.wire_count))
    for e in encodings:
        out = apply_gates(register_state(data, e, circuit.workspace), circuit.gates)
        data = out.drop_wires(extra)
    return data


def gate_histogram(gates: Iterable[Gate]) -> dict[str, int]:
    hist: dict[str, int] = {}
    for g in gates:
        hist[g.kind] = hist.get(g.kind, 0) + 1
    return dict(sorted(hist.items()))
