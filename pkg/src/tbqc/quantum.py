"""Dense statevector simulation with per-wire ownership.

Wire ``i`` is bit ``i`` of the basis index (little-endian).  A state of ``w``
wires is stored as a flat complex vector of length ``2**w``; gate kernels view
it as an array of shape ``(2**(w-1-i), 2, 2**i)`` so the middle axis is wire i.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_WIRES = 20
NORM_TOL = 1e-12
# looser bound at construction: rounding drifts by ~1e-15 per gate over long circuits
CONSTRUCT_TOL = 1e-10

_S2 = 1 / np.sqrt(2)
_W8 = np.exp(1j * np.pi / 4)

GATE_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _S2,
    "P": np.array([[1, 0], [0, 1j]], dtype=complex),
    "R": np.array([[1, 0], [0, _W8]], dtype=complex),
}

SINGLE_QUBIT_KINDS = frozenset({"X", "Y", "Z", "H", "P", "R", "RZ"})
TWO_QUBIT_KINDS = frozenset({"CNOT", "CZ"})
GATE_KINDS = SINGLE_QUBIT_KINDS | TWO_QUBIT_KINDS


class QuantumError(ValueError):
    """Invalid wire, gate or state argument."""


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * theta)]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    kind: str
    wires: tuple[int, ...]
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if self.kind not in GATE_KINDS:
            raise QuantumError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.wires) != arity:
            raise QuantumError(f"{self.kind} takes {arity} wire(s), got {self.wires}")
        if arity == 2 and self.wires[0] == self.wires[1]:
            raise QuantumError(f"{self.kind} needs two distinct wires")
        if any(w < 0 for w in self.wires):
            raise QuantumError(f"negative wire in {self.wires}")

    def matrix(self) -> np.ndarray:
        """Unitary on the gate's own wires; for two-wire gates the first wire is bit 0."""
        if self.kind == "RZ":
            return rz_matrix(self.theta)
        if self.kind in GATE_MATRICES:
            return GATE_MATRICES[self.kind]
        if self.kind == "CNOT":
            # control = wires[0] = bit 0, target = bit 1
            return np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)
        return np.diag([1, 1, 1, -1]).astype(complex)

    def __str__(self):
        args = ",".join(map(str, self.wires))
        if self.kind == "RZ":
            return f"RZ({self.theta:.6g})[{args}]"
        return f"{self.kind}[{args}]"


@dataclass(frozen=True)
class StateVector:
    """Pure state over labelled wires; ``owner[i]`` is the party holding wire i."""

    amplitudes: np.ndarray
    owner: tuple[str, ...] = field(default=())

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        w = amps.size.bit_length() - 1
        if w < 0 or 1 << w != amps.size:
            raise QuantumError(f"amplitude vector length {amps.size} is not a power of two")
        if w > MAX_WIRES:
            raise QuantumError(f"{w} wires exceeds the simulator limit of {MAX_WIRES}")
        owner = tuple(self.owner) if self.owner else ("S",) * w
        if len(owner) != w:
            raise QuantumError(f"owner map covers {len(owner)} wires, state has {w}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1) > CONSTRUCT_TOL:
            raise QuantumError(f"state norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "owner", owner)

    @property
    def wire_count(self) -> int:
        return len(self.owner)

    @classmethod
    def basis(cls, bits: Sequence[int] | str, owner: str = "S") -> "StateVector":
        """Computational basis state; ``bits[i]`` is the value of wire i."""
        bits = [int(b) for b in bits]
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[sum(b << i for i, b in enumerate(bits))] = 1
        return cls(amps, (owner,) * len(bits))

    @classmethod
    def from_single(cls, vec: Sequence[complex], owner: str = "S") -> "StateVector":
        v = np.asarray(vec, dtype=complex)
        return cls(v / np.linalg.norm(v), (owner,))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm() - 1) > tol:
            raise QuantumError(f"state norm {self.norm()!r} differs from 1")

    def with_owner(self, wires: Iterable[int], party: str) -> "StateVector":
        owner = list(self.owner)
        for w in wires:
            _check_wire(self, w)
            owner[w] = party
        return StateVector(self.amplitudes, tuple(owner))

    def owned_by(self, party: str) -> list[int]:
        return [i for i, p in enumerate(self.owner) if p == party]

    def tensor(self, other: "StateVector") -> "StateVector":
        """Append ``other``'s wires after this state's wires."""
        amps = np.kron(other.amplitudes, self.amplitudes)
        return StateVector(amps, self.owner + other.owner)

    def drop_wires(self, wires: Iterable[int], tol: float = 1e-9) -> "StateVector":
        """Remove wires that are in a product state with the rest.

        Raises if the dropped wires are entangled with the kept ones.
        """
        drop = sorted(set(wires))
        for w in drop:
            _check_wire(self, w)
        keep = [i for i in range(self.wire_count) if i not in drop]
        if not keep:
            raise QuantumError("cannot drop every wire")
        mat = _as_matrix(self, keep)
        col = int(np.argmax(np.linalg.norm(mat, axis=0)))
        vec = mat[:, col] / np.linalg.norm(mat[:, col])
        coeffs = vec.conj() @ mat
        if np.max(np.abs(mat - np.outer(vec, coeffs))) > tol:
            raise QuantumError(f"wires {drop} are entangled with the rest of the state")
        return StateVector(vec, tuple(self.owner[i] for i in keep))

    def __len__(self):
        return self.wire_count


def _check_wire(state: StateVector, wire: int) -> None:
    if not 0 <= wire < state.wire_count:
        raise QuantumError(f"wire {wire} out of range for {state.wire_count}-wire state")


def _as_matrix(state: StateVector, keep: Sequence[int]) -> np.ndarray:
    """Reshape amplitudes into (kept subsystem) x (rest); kept wires little-endian."""
    w = state.wire_count
    tensor = state.amplitudes.reshape((2,) * w)
    keep_axes = [w - 1 - i for i in reversed(keep)]
    rest_axes = [a for a in range(w) if a not in keep_axes]
    return np.transpose(tensor, keep_axes + rest_axes).reshape(2 ** len(keep), -1)


def _apply_1q(amps: np.ndarray, u: np.ndarray, wire: int, w: int, batch: int = 1) -> np.ndarray:
    # a trailing batch axis rides along with the low-order wires
    v = amps.reshape(2 ** (w - 1 - wire), 2, 2**wire * batch)
    out = np.empty_like(v)
    a0, a1 = v[:, 0, :], v[:, 1, :]
    if u[0, 1] == 0 and u[1, 0] == 0:
        out[:, 0, :] = u[0, 0] * a0 if u[0, 0] != 1 else a0
        out[:, 1, :] = u[1, 1] * a1
    else:
        out[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
        out[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return out.reshape(-1)


def _apply_2q(amps: np.ndarray, kind: str, a: int, b: int, w: int, batch: int = 1) -> np.ndarray:
    t = amps.reshape((2,) * w + (batch,)).copy()
    ax_a, ax_b = w - 1 - a, w - 1 - b

    def idx(va, vb):
        i = [slice(None)] * (w + 1)
        i[ax_a], i[ax_b] = va, vb
        return tuple(i)

    if kind == "CNOT":
        t[idx(1, 0)], t[idx(1, 1)] = t[idx(1, 1)].copy(), t[idx(1, 0)].copy()
    else:
        t[idx(1, 1)] *= -1
    return t.reshape(-1)


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    for wire in gate.wires:
        _check_wire(state, wire)
    w = state.wire_count
    if gate.kind in TWO_QUBIT_KINDS:
        amps = _apply_2q(state.amplitudes, gate.kind, gate.wires[0], gate.wires[1], w)
    else:
        amps = _apply_1q(state.amplitudes, gate.matrix(), gate.wires[0], w)
    return StateVector(amps, state.owner)


def apply_matrix(state: StateVector, u: np.ndarray, wire: int) -> StateVector:
    _check_wire(state, wire)
    return StateVector(_apply_1q(state.amplitudes, np.asarray(u, dtype=complex), wire, state.wire_count), state.owner)


def apply_gates(state: StateVector, gates: Iterable[Gate]) -> StateVector:
    for g in gates:
        state = apply_gate(state, g)
    return state


def apply_gates_batch(columns: np.ndarray, gates: Iterable[Gate]) -> np.ndarray:
    """Apply a gate list to every column of a (2^w, B) array of amplitude vectors.

    Works in place on one private copy; diagonal and permutation gates only
    touch the affected half or quarter of the array.
    """
    cols = np.array(columns, dtype=complex, order="C", copy=True)
    dim, batch = cols.shape
    w = dim.bit_length() - 1
    if 1 << w != dim:
        raise QuantumError(f"row count {dim} is not a power of two")
    t = cols.reshape((2,) * w + (batch,))
    full = [slice(None)] * (w + 1)

    def at(**fixed):
        i = list(full)
        for wire, v in fixed.values():
            i[w - 1 - wire] = v
        return tuple(i)

    for g in gates:
        if any(not 0 <= x < w for x in g.wires):
            raise QuantumError(f"gate {g} out of range for {w} wires")
        if g.kind == "CNOT":
            c, x = g.wires
            lo, hi = at(c=(c, 1), x=(x, 0)), at(c=(c, 1), x=(x, 1))
            tmp = t[lo].copy()
            t[lo] = t[hi]
            t[hi] = tmp
        elif g.kind == "CZ":
            t[at(a=(g.wires[0], 1), b=(g.wires[1], 1))] *= -1
        else:
            u = g.matrix()
            q = g.wires[0]
            lo, hi = at(q=(q, 0)), at(q=(q, 1))
            if u[0, 1] == 0 and u[1, 0] == 0:
                if u[0, 0] != 1:
                    t[lo] *= u[0, 0]
                if u[1, 1] != 1:
                    t[hi] *= u[1, 1]
            elif g.kind == "X":
                tmp = t[lo].copy()
                t[lo] = t[hi]
                t[hi] = tmp
            else:
                a0, a1 = t[lo].copy(), t[hi]
                t[lo] = u[0, 0] * a0 + u[0, 1] * a1
                t[hi] = u[1, 0] * a0 + u[1, 1] * a1
    return cols


def prepare_plus_theta(theta: float, owner: str = "S") -> StateVector:
    return StateVector(np.array([1, np.exp(1j * theta)]) * _S2, (owner,))


def measure_in_basis(
    state: StateVector,
    wire: int,
    delta: float,
    rng: np.random.Generator,
    remove: bool = True,
) -> tuple[int, StateVector]:
    """Projective measurement of ``wire`` in the basis {|+_delta>, |-_delta>}.

    Outcome 0 is |+_delta>.  With ``remove`` the measured wire disappears from
    the returned state; otherwise it is reset to |0>.
    """
    _check_wire(state, wire)
    w = state.wire_count
    v = state.amplitudes.reshape(2 ** (w - 1 - wire), 2, 2**wire)
    ph = np.exp(-1j * delta)
    branches = [(v[:, 0, :] + ph * v[:, 1, :]) * _S2, (v[:, 0, :] - ph * v[:, 1, :]) * _S2]
    p1 = float(np.sum(np.abs(branches[1]) ** 2))
    bit = int(rng.random() < p1)
    post = branches[bit]
    post = post / np.linalg.norm(post)
    if remove:
        owner = state.owner[:wire] + state.owner[wire + 1:]
        return bit, StateVector(post.reshape(-1), owner)
    out = np.zeros_like(v)
    out[:, 0, :] = post
    return bit, StateVector(out.reshape(-1), state.owner)


def outcome_probabilities(state: StateVector, wire: int, delta: float) -> tuple[float, float]:
    """Born probabilities of outcomes 0 and 1 for ``measure_in_basis``."""
    _check_wire(state, wire)
    w = state.wire_count
    v = state.amplitudes.reshape(2 ** (w - 1 - wire), 2, 2**wire)
    ph = np.exp(-1j * delta)
    p0 = float(np.sum(np.abs((v[:, 0, :] + ph * v[:, 1, :]) * _S2) ** 2))
    return p0, 1.0 - p0


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise QuantumError(f"shape mismatch {a.shape} vs {b.shape}")
    # phase fixed by the largest-magnitude entry of b
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) == 0:
        return bool(np.max(np.abs(a)) <= tol)
    lam = a[idx] / b[idx]
    if abs(lam) == 0:
        return False
    lam /= abs(lam)
    return bool(np.max(np.abs(a - lam * b)) <= tol)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.wire_count != b.wire_count:
        raise QuantumError(f"wire count mismatch {a.wire_count} vs {b.wire_count}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def density_of(state: StateVector, wires: Sequence[int]) -> np.ndarray:
    """Reduced density matrix of ``wires`` (listed order = little-endian bit order)."""
    wires = list(wires)
    if not wires:
        raise QuantumError("empty wire set")
    if len(set(wires)) != len(wires):
        raise QuantumError(f"repeated wire in {wires}")
    for wire in wires:
        _check_wire(state, wire)
    m = _as_matrix(state, wires)
    return m @ m.conj().T


def is_density_matrix(rho: np.ndarray, tol: float = 1e-12) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.max(np.abs(rho - rho.conj().T)) > tol or abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.min(np.linalg.eigvalsh(rho)) >= -1e-10)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise QuantumError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    return 0.5 * float(np.sum(np.linalg.svd(rho - sigma, compute_uv=False)))


def circuit_unitary(gates: Sequence[Gate], wire_count: int) -> np.ndarray:
    """Matrix of a gate list, built column by column from basis states."""
    dim = 2**wire_count
    cols = np.empty((dim, dim), dtype=complex)
    for i in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[i] = 1
        cols[:, i] = apply_gates(StateVector(e, ("S",) * wire_count), gates).amplitudes
    return cols
