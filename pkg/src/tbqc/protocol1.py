"""Measurement-based protocol: C hides its input, T hides the graph, S measures.

Angles are handled as integers k meaning k·π/4, so all angle arithmetic is
exact mod 8.  Graph nodes are (column, row) with columns 0..n and rows 1..m;
column 0 holds C's inputs, columns 1..n-1 T's rotated qubits and column n
the outputs S prepares as |+>.  The flow sends node (x, y) to (x+1, y).

The adaptive rule for T's angles, and the X/Z dependency bookkeeping used for
C's final Pauli correction, follow standard measurement-based computation.
For an input flipped by X^i and rotated by Z(θ), T sends
δ = (-1)^i (φ' + θ) + rπ, and the flip leaves a Z byproduct on every
neighbour of the input node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .quantum import GATE_MATRICES, Gate, StateVector, apply_gate, apply_matrix, density_of, measure_in_basis, rz_matrix
from .transport import Network, ProtocolViolation, Transcript, party_streams

Node = tuple[int, int]
QUARTER = np.pi / 4


def angle(k: int) -> float:
    return (k % 8) * QUARTER


@dataclass(frozen=True)
class BrickworkLayout:
    columns: int  # n: the output column index
    rows: int  # m
    cz_edges: tuple[tuple[Node, Node], ...]

    def __post_init__(self):
        edges = tuple(tuple(sorted(e)) for e in self.cz_edges)
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate CZ edge in layout")
        for a, b in edges:
            for x, y in (a, b):
                if not (0 <= x <= self.columns and 1 <= y <= self.rows):
                    raise ValueError(f"edge endpoint {(x, y)} outside the layout")
        for y in range(1, self.rows + 1):
            for x in range(self.columns):
                if ((x, y), (x + 1, y)) not in edges:
                    raise ValueError(f"missing horizontal edge at {(x, y)}")
        object.__setattr__(self, "cz_edges", edges)

    @classmethod
    def linear(cls, columns: int, rows: int = 1) -> "BrickworkLayout":
        """Independent linear clusters, one per row (no vertical edges)."""
        edges = [((x, y), (x + 1, y)) for y in range(1, rows + 1) for x in range(columns)]
        return cls(columns, rows, tuple(edges))

    @classmethod
    def brickwork(cls, columns: int, rows: int) -> "BrickworkLayout":
        """Horizontal lines plus alternating vertical bricks.

        Rows y, y+1 are joined at columns x ≡ 2, 4 (mod 8) for odd y and
        x ≡ 6, 0 (mod 8, x > 0) for even y.
        """
        edges = [((x, y), (x + 1, y)) for y in range(1, rows + 1) for x in range(columns)]
        for x in range(columns + 1):
            for y in range(1, rows):
                if (y % 2 == 1 and x % 8 in (2, 4)) or (y % 2 == 0 and x > 0 and x % 8 in (6, 0)):
                    edges.append(((x, y), (x, y + 1)))
        return cls(columns, rows, tuple(edges))

    @property
    def nodes(self) -> list[Node]:
        return [(x, y) for x in range(self.columns + 1) for y in range(1, self.rows + 1)]

    @property
    def measured(self) -> list[Node]:
        return [(x, y) for x in range(self.columns) for y in range(1, self.rows + 1)]

    @property
    def outputs(self) -> list[Node]:
        return [(self.columns, y) for y in range(1, self.rows + 1)]

    def wire(self, node: Node) -> int:
        x, y = node
        return x * self.rows + (y - 1)

    def neighbours(self, node: Node) -> list[Node]:
        out = []
        for a, b in self.cz_edges:
            if a == node:
                out.append(b)
            elif b == node:
                out.append(a)
        return out

    def flow(self, node: Node) -> Node:
        return (node[0] + 1, node[1])


@dataclass
class MeasurementLedger:
    """All classical values of one run; each party only reads its own entries."""

    theta: dict[Node, int] = field(default_factory=dict)  # multiples of π/4
    input_flip: dict[int, int] = field(default_factory=dict)  # i_{0,y}
    r: dict[Node, int] = field(default_factory=dict)
    delta: dict[Node, int] = field(default_factory=dict)
    outcome: dict[Node, int] = field(default_factory=dict)  # b_{x,y}
    s: dict[Node, int] = field(default_factory=dict)


class Byproducts:
    """X/Z byproduct bits accumulated on unmeasured nodes."""

    def __init__(self, layout: BrickworkLayout, input_flips: dict[int, int] | None = None):
        self.layout = layout
        self.x = {v: 0 for v in layout.nodes}
        self.z = {v: 0 for v in layout.nodes}
        for y, i in (input_flips or {}).items():
            if i:
                for u in layout.neighbours((0, y)):
                    self.z[u] ^= 1

    def record(self, node: Node, s: int) -> None:
        if not s:
            return
        nxt = self.layout.flow(node)
        self.x[nxt] ^= 1
        for u in self.layout.neighbours(nxt):
            if u != node:
                self.z[u] ^= 1

    def adapted_angle(self, node: Node, phi: int) -> int:
        """φ' = (-1)^{s_X} φ + s_Z π, as a multiple of π/4."""
        sign = -1 if self.x[node] else 1
        return (sign * phi + 4 * self.z[node]) % 8


def compute_delta(phi_adapted: int, theta: int, r: int, input_flip: int = 0) -> int:
    base = phi_adapted + theta
    if input_flip:
        base = -base
    return (base + 4 * r) % 8


def correction_bits(layout: BrickworkLayout, s: dict[Node, int], input_flips: dict[int, int]) -> dict[int, tuple[int, int]]:
    """(s^X, s^Z) for each output row, from the measured s values."""
    bp = Byproducts(layout, input_flips)
    for node in layout.measured:
        if node not in s:
            raise ProtocolViolation(f"missing s value for node {node}")
        bp.record(node, s[node])
    return {y: (bp.x[(layout.columns, y)], bp.z[(layout.columns, y)]) for y in range(1, layout.rows + 1)}


# -- step functions ------------------------------------------------------------

def client_encrypt_inputs(inputs: StateVector, ledger: MeasurementLedger, rng, thetas=None, flips=None) -> StateVector:
    """Apply Z(θ_{0,y}) then X^{i_{0,y}} to each input row; values go to the ledger."""
    m = inputs.wire_count
    thetas = list(thetas) if thetas is not None else list(rng.integers(0, 8, size=m))
    flips = list(flips) if flips is not None else list(rng.integers(0, 2, size=m))
    if len(thetas) != m or len(flips) != m:
        raise ValueError(f"need {m} angles and flips")
    for y in range(1, m + 1):
        w = y - 1
        th, i = int(thetas[w]) % 8, int(flips[w])
        ledger.theta[(0, y)] = th
        ledger.input_flip[y] = i
        inputs = apply_matrix(inputs, rz_matrix(angle(th)), w)
        if i:
            inputs = apply_gate(inputs, Gate("X", (w,)))
    return inputs


def third_prepare_qubits(layout: BrickworkLayout, ledger: MeasurementLedger, rng, thetas=None) -> StateVector | None:
    """|+_θ> for every node in columns 1..n-1; None when there are none."""
    nodes = [(x, y) for x in range(1, layout.columns) for y in range(1, layout.rows + 1)]
    if not nodes:
        return None
    thetas = list(thetas) if thetas is not None else list(rng.integers(0, 8, size=len(nodes)))
    amps = np.ones(1, dtype=complex)
    for node, th in zip(nodes, thetas):
        ledger.theta[node] = int(th) % 8
        single = np.array([1, np.exp(1j * angle(th))]) / np.sqrt(2)
        amps = np.kron(single, amps)
    return StateVector(amps, ("T",) * len(nodes))


def server_build_brickwork(received: StateVector, layout: BrickworkLayout) -> StateVector:
    """Append the |+> output column and apply CZ on every layout edge."""
    expected = layout.columns * layout.rows
    if received.wire_count != expected:
        raise ProtocolViolation(f"S holds {received.wire_count} wires, layout needs {expected} before outputs")
    plus = StateVector(np.ones(2**layout.rows) / np.sqrt(2**layout.rows), ("S",) * layout.rows)
    state = received.tensor(plus)
    for a, b in layout.cz_edges:
        state = apply_gate(state, Gate("CZ", (layout.wire(a), layout.wire(b))))
    return state


def client_final_correction(outputs: StateVector, corrections: dict[int, tuple[int, int]]) -> StateVector:
    """Apply Z^{s^Z} X^{s^X} on each output row."""
    for y, (sx, sz) in corrections.items():
        w = y - 1
        if sx:
            outputs = apply_gate(outputs, Gate("X", (w,)))
        if sz:
            outputs = apply_gate(outputs, Gate("Z", (w,)))
    return outputs


def parse_pattern(text: str) -> list[list[int]]:
    """Rows of nominal angles in units of π/4: one line per column, one entry per row."""
    cols = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            cols.append([int(v) % 8 for v in line.replace(",", " ").split()])
    if not cols or len({len(c) for c in cols}) != 1:
        raise ValueError("pattern needs at least one column and the same row count on every line")
    return cols


def named_pattern(name: str, columns: int, rows: int = 1) -> list[list[int]]:
    """Angle tables for the built-in patterns on linear clusters.

    ``identity`` (all zeros) realises the identity only for an even column count;
    ``x`` puts π on the last measured column, realising X for even counts.
    """
    if columns < 1:
        raise ValueError("need at least one measured column")
    table = [[0] * rows for _ in range(columns)]
    if name == "identity":
        return table
    if name == "x":
        table[-1] = [4] * rows
        return table
    raise ValueError(f"unknown pattern {name!r}")


@dataclass
class Protocol1Result:
    output: StateVector
    transcript: Transcript
    ledger: MeasurementLedger
    server_inputs: np.ndarray  # density matrix of the column-0 wires when S received them
    server_outputs: StateVector  # output wires as S hands them over, before correction
    corrections: dict[int, tuple[int, int]]


class Protocol1Session:
    def __init__(self, layout: BrickworkLayout, pattern: Sequence[Sequence[int]], seed: int = 0, *, rngs=None):
        if len(pattern) != layout.columns or any(len(col) != layout.rows for col in pattern):
            raise ValueError(f"pattern must be {layout.columns} columns x {layout.rows} rows")
        if layout.rows * (layout.columns + 1) > 12:
            raise ValueError("graph exceeds the 12-wire budget")
        self.layout = layout
        self.pattern = [list(c) for c in pattern]
        streams = party_streams(seed)
        self.rngs = rngs or {k: streams[k] for k in ("C", "S", "T")}
        self.ledger = MeasurementLedger()
        self.net = Network()

    def run(self, inputs: StateVector, thetas0=None, flips0=None, thetas=None, rs=None) -> Protocol1Result:
        lay, led, net = self.layout, self.ledger, self.net
        m = lay.rows
        if inputs.wire_count != m:
            raise ValueError(f"expected {m} input wires, got {inputs.wire_count}")
        rng_c, rng_t, rng_s = self.rngs["C"], self.rngs["T"], self.rngs["S"]

        # step 1
        state = client_encrypt_inputs(inputs.with_owner(range(m), "C"), led, rng_c, thetas0, flips0)
        state = net.send_quantum(state, "C", "S", range(m), "step1.inputs")
        server_inputs = density_of(state, range(m))
        net.send_classical("C", "T", "theta0", _angle_bits([led.theta[(0, y)] for y in range(1, m + 1)]), "step1.keys")
        net.send_classical("C", "T", "flip0", [led.input_flip[y] for y in range(1, m + 1)], "step1.keys")

        # step 2
        prepared = third_prepare_qubits(lay, led, rng_t, thetas)
        if prepared is not None:
            k = prepared.wire_count
            state = state.tensor(prepared)
            state = net.send_quantum(state, "T", "S", range(m, m + k), "step2.qubits")

        # step 3
        net.send_classical("S", "C", "received", [1], "step3.ack")
        state = server_build_brickwork(state, lay)

        # step 4
        bp = Byproducts(lay, led.input_flip)
        r_bits = list(rs) if rs is not None else None
        for idx, node in enumerate(lay.measured):
            x, y = node
            tag = f"step4.measure.{x}.{y}"
            r = int(r_bits[idx]) if r_bits is not None else int(rng_t.integers(0, 2))
            led.r[node] = r
            phi_adapted = bp.adapted_angle(node, self.pattern[x][y - 1])
            delta = compute_delta(phi_adapted, led.theta[node], r, led.input_flip[y] if x == 0 else 0)
            led.delta[node] = delta
            net.send_classical("T", "S", "delta", _angle_bits([delta]), tag)
            w = lay.wire(node)
            if state.owner[w] != "S":
                raise ProtocolViolation(f"S asked to measure wire {w} it does not hold")
            b, state = _measure_keep(state, w, angle(delta), rng_s)
            led.outcome[node] = b
            net.send_classical("S", "T", "outcome", [b], tag)
            s = b ^ r
            led.s[node] = s
            bp.record(node, s)

        # step 5
        s_list = [led.s[v] for v in lay.measured]
        net.send_classical("T", "C", "s-values", s_list, "step5.s")
        out_wires = [lay.wire(v) for v in lay.outputs]
        state = net.send_quantum(state, "S", "C", out_wires, "step5.outputs")
        outputs = state.drop_wires([w for w in range(state.wire_count) if w not in out_wires])

        # step 6
        corrections = correction_bits(lay, led.s, led.input_flip)
        result = client_final_correction(outputs, corrections)
        net.transcript.final_owner = result.owner
        return Protocol1Result(result, net.transcript, led, server_inputs, outputs, corrections)


def _measure_keep(state: StateVector, wire: int, delta: float, rng) -> tuple[int, StateVector]:
    b, post = measure_in_basis(state, wire, delta, rng, remove=False)
    return b, post


def _angle_bits(ks: Sequence[int]) -> list[int]:
    return [(k >> i) & 1 for k in ks for i in (2, 1, 0)]


def mbqc_oracle(inputs: StateVector, layout: BrickworkLayout, pattern: Sequence[Sequence[int]]) -> StateVector:
    """Unencrypted reference: build the graph, post-select every measurement on outcome 0.

    With all outcomes 0 no byproduct corrections arise, so the normalised
    output is the pattern's ideal result.
    """
    m = layout.rows
    state = inputs
    mid = (layout.columns - 1) * m
    if mid > 0:
        state = state.tensor(StateVector(np.ones(2**mid) / np.sqrt(2**mid), ("S",) * mid))
    state = server_build_brickwork(state, layout)
    amps = state.amplitudes.reshape((2,) * state.wire_count)
    w = state.wire_count
    for node in layout.measured:
        x, y = node
        phi = angle(pattern[x][y - 1])
        ax = w - 1 - layout.wire(node)
        proj = np.array([1, np.exp(-1j * phi)]) / np.sqrt(2)  # <+_phi|
        projected = np.tensordot(proj, amps, axes=([0], [ax]))
        # measured wire left in |0>
        amps = np.stack([projected, np.zeros_like(projected)], axis=ax)
    out = amps.reshape(-1)
    keep = [layout.wire(v) for v in layout.outputs]
    post = StateVector(out / np.linalg.norm(out), ("S",) * w)
    return post.drop_wires([i for i in range(w) if i not in keep])


def line_oracle(inputs: StateVector, pattern: Sequence[Sequence[int]]) -> StateVector:
    """Closed form for one row: each measured column applies H·Z(-φ)."""
    state = inputs
    h = GATE_MATRICES["H"]
    for col in pattern:
        state = apply_matrix(state, h @ rz_matrix(-angle(col[0])), 0)
    return state


@dataclass
class CollusionBreak:
    recovered_input: list[int]
    recovered_input_density: np.ndarray
    recovered_output: StateVector


def collusion_break_demo(result: Protocol1Result) -> CollusionBreak:
    """S and T pool their views to undo C's encryption of both input and output.

    T contributes θ_{0,y}, i_{0,y} and all s values; S contributes the input
    qubits it received and the output qubits it would hand to C.
    """
    led = result.ledger
    rho = result.server_inputs
    m = int(np.log2(rho.shape[0]))
    undo = np.eye(1, dtype=complex)
    for y in range(1, m + 1):
        single = rz_matrix(-angle(led.theta[(0, y)]))
        if led.input_flip[y]:
            single = single @ GATE_MATRICES["X"]
        undo = np.kron(single, undo)
    plain = undo @ rho @ undo.conj().T
    probs = np.real(np.diag(plain))
    best = int(np.argmax(probs))
    bits = [(best >> i) & 1 for i in range(m)]
    # T knows every s value and the input flips, hence C's correction
    recovered = client_final_correction(result.server_outputs, result.corrections)
    return CollusionBreak(bits, plain, recovered)


def server_alone_input_view(inputs: StateVector) -> np.ndarray:
    """Column-0 density matrix S receives, averaged over all 8x2 (θ, i) choices per row."""
    m = inputs.wire_count
    rho = np.zeros((2**m, 2**m), dtype=complex)
    count = 0
    for combo in np.ndindex(*([8, 2] * m)):
        led = MeasurementLedger()
        thetas, flips = combo[0::2], combo[1::2]
        st = client_encrypt_inputs(inputs.with_owner(range(m), "C"), led, None, thetas, flips)
        rho += density_of(st, range(m))
        count += 1
    return rho / count
