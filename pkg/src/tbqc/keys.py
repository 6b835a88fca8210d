"""Quantum one-time-pad keys and their gate-by-gate update rules.

A key holds one X bit and one Z bit per wire; the pad it describes is
``X^x Z^z`` on every wire.  Data wires come first, then encoding wires.
The same rules are run independently by the client and by the third party;
only the R gate needs an interactive step (see :func:`update_key_r`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .quantum import GATE_MATRICES, Gate, QuantumError, StateVector, apply_matrix

CLIFFORD_KINDS = frozenset({"X", "Y", "Z", "H", "P", "CNOT"})


class KeyUpdateError(ValueError):
    """Raised for malformed keys or unsupported key updates."""


def _bits(values: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(v) for v in values)
    if any(v not in (0, 1) for v in out):
        raise KeyUpdateError(f"key bits must be 0/1, got {out}")
    return out


@dataclass(frozen=True)
class PauliKey:
    x: tuple[int, ...]
    z: tuple[int, ...]
    n: int  # number of data wires; wires n.. are encoding wires

    def __post_init__(self):
        object.__setattr__(self, "x", _bits(self.x))
        object.__setattr__(self, "z", _bits(self.z))
        if len(self.x) != len(self.z):
            raise KeyUpdateError(f"x and z masks differ in length ({len(self.x)} vs {len(self.z)})")
        if not 0 <= self.n <= len(self.x):
            raise KeyUpdateError(f"data part {self.n} does not fit a {len(self.x)}-bit key")

    @property
    def size(self) -> int:
        return len(self.x)

    @property
    def data_part(self) -> range:
        return range(self.n)

    @property
    def encoding_part(self) -> range:
        return range(self.n, self.size)

    @classmethod
    def zeros(cls, n: int, m: int) -> "PauliKey":
        return cls((0,) * (n + m), (0,) * (n + m), n)

    @classmethod
    def random(cls, n: int, m: int, rng: np.random.Generator) -> "PauliKey":
        bits = rng.integers(0, 2, size=2 * (n + m))
        return cls(tuple(bits[: n + m]), tuple(bits[n + m:]), n)

    @classmethod
    def from_int(cls, value: int, n: int, m: int) -> "PauliKey":
        """Key whose x mask is the low n+m bits of ``value`` and z mask the next n+m."""
        size = n + m
        bits = [(value >> i) & 1 for i in range(2 * size)]
        return cls(tuple(bits[:size]), tuple(bits[size:]), n)

    def at(self, wire: int) -> tuple[int, int]:
        self._check(wire)
        return self.x[wire], self.z[wire]

    def replace(self, wire: int, x: int, z: int) -> "PauliKey":
        self._check(wire)
        if x not in (0, 1) or z not in (0, 1):
            raise KeyUpdateError(f"key bits must be 0/1, got ({x}, {z})")
        xs, zs = list(self.x), list(self.z)
        xs[wire], zs[wire] = x, z
        # masks were validated on construction; skip re-checking the untouched bits
        out = object.__new__(PauliKey)
        object.__setattr__(out, "x", tuple(xs))
        object.__setattr__(out, "z", tuple(zs))
        object.__setattr__(out, "n", self.n)
        return out

    def restrict(self, wires: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return tuple(self.x[w] for w in wires), tuple(self.z[w] for w in wires)

    def extend(self, extra: int) -> "PauliKey":
        return PauliKey(self.x + (0,) * extra, self.z + (0,) * extra, self.n)

    def _check(self, wire: int) -> None:
        if not 0 <= wire < self.size:
            raise KeyUpdateError(f"wire {wire} out of range for {self.size}-bit key")


@dataclass(frozen=True)
class RGateLocalBits:
    r: int
    r_prime: int
    s: int
    s_prime: int
    alpha: int
    beta: int


def update_key_clifford(key: PauliKey, gate: Gate) -> PauliKey:
    """Propagate a key through a Clifford gate so that G·pad = pad'·G up to phase."""
    if gate.kind == "R":
        raise KeyUpdateError("R gates need the interactive update; use update_key_r")
    if gate.kind not in CLIFFORD_KINDS:
        raise KeyUpdateError(f"no key-update rule for {gate.kind}")
    for w in gate.wires:
        key._check(w)
    if gate.kind in ("X", "Y", "Z"):
        return key
    w = gate.wires[0]
    x, z = key.at(w)
    if gate.kind == "H":
        return key.replace(w, z, x)
    if gate.kind == "P":
        return key.replace(w, x, x ^ z)
    # CNOT: control w, target w2
    w2 = gate.wires[1]
    x2, z2 = key.at(w2)
    return key.replace(w, x, z ^ z2).replace(w2, x ^ x2, z2)


def update_key_r(key: PauliKey, w: int, local: RGateLocalBits, role: str) -> PauliKey:
    x, z = key.at(w)
    if role == "C":
        return key.replace(w, local.r ^ x, local.r_prime ^ local.alpha ^ z ^ x)
    if role == "T":
        return key.replace(w, local.s ^ x, local.s_prime ^ local.beta ^ z ^ x)
    raise KeyUpdateError(f"role must be 'C' or 'T', got {role!r}")


def update_key(key: PauliKey, gate: Gate, local: RGateLocalBits | None = None, role: str = "C") -> PauliKey:
    if gate.kind == "R":
        if local is None:
            raise KeyUpdateError("R gate update needs the detour's local bits")
        return update_key_r(key, gate.wires[0], local, role)
    return update_key_clifford(key, gate)


def pad_matrix(x: int, z: int) -> np.ndarray:
    """Single-wire pad X^x Z^z."""
    out = np.eye(2, dtype=complex)
    if z:
        out = GATE_MATRICES["Z"] @ out
    if x:
        out = GATE_MATRICES["X"] @ out
    return out


def apply_qotp(state: StateVector, key: PauliKey, wires: Iterable[int], key_offset: int = 0) -> StateVector:
    """Apply X^{x(w)} Z^{z(w)} (Z first) to each state wire ``w``.

    ``key_offset`` maps state wire ``w`` to key position ``w + key_offset``,
    for states that hold only part of the key's wires.
    """
    for w in wires:
        if not 0 <= w < state.wire_count:
            raise QuantumError(f"wire {w} out of range for {state.wire_count}-wire state")
        x, z = key.at(w + key_offset)
        if x or z:
            state = apply_matrix(state, pad_matrix(x, z), w)
    return state


def combined_key(kc: PauliKey, kt: PauliKey) -> PauliKey:
    if kc.size != kt.size or kc.n != kt.n:
        raise KeyUpdateError(f"cannot combine keys of shape ({kc.size},{kc.n}) and ({kt.size},{kt.n})")
    return PauliKey(
        tuple(a ^ b for a, b in zip(kc.x, kt.x)),
        tuple(a ^ b for a, b in zip(kc.z, kt.z)),
        kc.n,
    )
