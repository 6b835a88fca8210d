"""Mechanical checks of blindness, collusion resistance and weak verifiability.

A party's view is a classical-quantum state: for each value of the classical
bits the coalition sees, a sub-normalised density matrix of the quantum
systems it holds.  Averaging over the victim's randomness and comparing the
resulting views by trace distance tells whether the victim's input leaks.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .andbox import ScriptedAndBox
from .keys import PauliKey, apply_qotp
from .protocol2 import (
    Protocol2Session,
    client_encrypt_data,
    client_encrypt_encoding,
    third_encrypt_data,
    third_encrypt_encoding,
)
from .quantum import StateVector, trace_distance
from .transport import ScriptedBits
from .uqc import Circuit

EXACT_TOL = 1e-10
MAX_TERMS = 2**20

CQView = dict[tuple, np.ndarray]


class AnalysisSizeError(ValueError):
    """Randomness space too large to enumerate."""


@dataclass
class Report:
    check: str
    parameters: dict
    distances: list[dict] = field(default_factory=list)
    passed: bool = False

    def to_json(self) -> dict:
        return {"check": self.check, "parameters": self.parameters, "distances": self.distances, "pass": self.passed}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def cq_distance(a: CQView, b: CQView) -> float:
    """Trace distance between two block-diagonal classical-quantum states."""
    total = 0.0
    for key in set(a) | set(b):
        ra, rb = a.get(key), b.get(key)
        if ra is None:
            ra = np.zeros_like(rb)
        if rb is None:
            rb = np.zeros_like(ra)
        total += trace_distance(ra, rb)
    return total


def _add(view: CQView, key: tuple, rho: np.ndarray, weight: float) -> None:
    if key in view:
        view[key] += weight * rho
    else:
        view[key] = weight * rho


def _as_state(d, n: int | None = None, owner: str = "C") -> StateVector:
    if isinstance(d, StateVector):
        return d.with_owner(range(d.wire_count), owner)
    return StateVector.basis(d, owner=owner)


# -- blindness ----------------------------------------------------------------

def server_ciphertext(d: StateVector, e: str, kc: PauliKey, kt: PauliKey) -> StateVector:
    """The doubly padded data ⊗ encoding S receives in steps 1 and 2."""
    data = third_encrypt_data(client_encrypt_data(d, kc).with_owner(range(kc.n), "T"), kt)
    enc = client_encrypt_encoding(third_encrypt_encoding(e, kt), kc)
    return data.tensor(enc)


def blindness_twirl_check(
    inputs: Sequence[tuple],
    key_space: str = "exhaustive",
    samples: int = 4096,
    seed: int = 0,
) -> Report:
    """Average S's received ciphertext over the initial keys of C and T.

    ``key_space``: ``exhaustive`` (every key pair), ``sampled`` (``samples``
    random pairs, bound 5/sqrt(samples)) or ``fixed`` (all-zero keys only; a
    negative control that must show a large distance).
    """
    states = [(_as_state(d), e) for d, e in inputs]
    n = states[0][0].wire_count
    m = len(states[0][1])
    if any(s.wire_count != n or len(e) != m for s, e in states):
        raise ValueError("all inputs need the same data and encoding widths")
    size = n + m
    if key_space == "exhaustive":
        if size > 4:
            raise AnalysisSizeError(f"exhaustive twirl limited to n+m <= 4, got {size}")
        count = 4**size
        pairs = ((PauliKey.from_int(a, n, m), PauliKey.from_int(b, n, m)) for a in range(count) for b in range(count))
        weight, bound = 1 / count**2, EXACT_TOL
    elif key_space == "sampled":
        rng = np.random.default_rng(seed)
        pairs = ((PauliKey.random(n, m, rng), PauliKey.random(n, m, rng)) for _ in range(samples))
        weight, bound = 1 / samples, 5 / math.sqrt(samples)
    elif key_space == "fixed":
        pairs = iter([(PauliKey.zeros(n, m), PauliKey.zeros(n, m))])
        weight, bound = 1.0, EXACT_TOL
    else:
        raise ValueError(f"unknown key space {key_space!r}")

    pairs = list(pairs)
    dim = 2**size
    averaged = []
    for d, e in states:
        rho = np.zeros((dim, dim), dtype=complex)
        for kc, kt in pairs:
            amps = server_ciphertext(d, e, kc, kt).amplitudes
            rho += weight * np.outer(amps, amps.conj())
        averaged.append(rho)

    mixed = np.eye(dim) / dim
    report = Report("blindness", {"n": n, "m": m, "key_space": key_space, "terms": len(pairs), "bound": bound})
    for (d, e), rho in zip(inputs, averaged):
        report.distances.append({"input": _label(d, e), "to_maximally_mixed": trace_distance(rho, mixed)})
    for i, j in itertools.combinations(range(len(averaged)), 2):
        report.distances.append({
            "pair": [_label(*inputs[i]), _label(*inputs[j])],
            "distance": trace_distance(averaged[i], averaged[j]),
        })
    values = [v for row in report.distances for k, v in row.items() if k in ("to_maximally_mixed", "distance")]
    report.passed = all(v <= bound for v in values)
    return report


def _label(d, e) -> str:
    if isinstance(d, StateVector):
        return f"<state>|{e}"
    return f"{d}|{e}"


# -- collusion ----------------------------------------------------------------

SNAPSHOTS = {
    # coalition -> snapshot names it observes
    "ST": ("data-at-T", "received", "evaluated", "result-at-T"),
    "SC": ("encoding-at-C", "received", "evaluated"),
}


class _Recorder(Protocol2Session):
    """Session that remembers the quantum snapshots a coalition could hold."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.snapshots: dict[str, np.ndarray] = {}

    def encrypt_inputs(self, d, e):
        super().encrypt_inputs(d, e)
        n, t = self.n, self.t_width
        self.snapshots["received"] = self.state.amplitudes
        # undo the second layer to recover what the middle party held
        kt, kc = self.third.key, self.client.key
        data = StateVector(self.state.amplitudes, self.state.owner).drop_wires(range(n, n + t))
        self.snapshots["data-at-T"] = apply_qotp(data, kt, range(n)).amplitudes
        enc = self.state.drop_wires(range(n))
        self.snapshots["encoding-at-C"] = apply_qotp(enc, kc, range(t), key_offset=n).amplitudes

    def decrypt_result(self):
        self.snapshots["evaluated"] = self.state.amplitudes
        data = self.state.drop_wires(range(self.n, self.circuit.wire_count))
        self.snapshots["result-at-T"] = data.amplitudes
        return super().decrypt_result()


def _randomness_space(circuit: Circuit) -> tuple[int, int]:
    """(key bits, per-R bits) for one key holder."""
    return 2 * circuit.wire_count, 2 * circuit.r_count


def _run_view(circuit, d, e, c_bits, t_bits, alphas) -> tuple[_Recorder, list]:
    sess = _Recorder(
        circuit,
        client_source=ScriptedBits(c_bits),
        third_source=ScriptedBits(t_bits),
        andbox=ScriptedAndBox(list(alphas)),
        record_notify=False,
    )
    sess.run_round(d, e)
    return sess, sess.andbox.log


def coalition_view(
    circuit: Circuit,
    d: StateVector,
    e: str,
    coalition: str,
    coalition_bits: Sequence[int],
    victim_assignments: Iterable[tuple[Sequence[int], Sequence[int]]],
) -> dict[str, CQView]:
    """Views per snapshot, averaged uniformly over the victim's assignments.

    Each victim assignment is (victim's own bits, AND-BOX alpha shares).
    """
    assignments = list(victim_assignments)
    weight = 1 / len(assignments)
    views: dict[str, CQView] = {name: {} for name in SNAPSHOTS[coalition]}
    for victim_bits, alphas in assignments:
        if coalition == "ST":
            sess, log = _run_view(circuit, d, e, victim_bits, coalition_bits, alphas)
            shares = tuple(rec.beta for rec in log)
        else:
            sess, log = _run_view(circuit, d, e, coalition_bits, victim_bits, alphas)
            shares = tuple(rec.alpha for rec in log)
        key = tuple(coalition_bits) + shares
        for name in views:
            amps = sess.snapshots[name]
            _add(views[name], key, np.outer(amps, amps.conj()), weight)
    return views


def collusion_view_check_p2(
    d1,
    d2,
    circuit: Circuit,
    e1: str | None = None,
    e2: str | None = None,
    coalition: str = "ST",
    fix_victim_key: bool = False,
    coalition_assignments: int | None = None,
    seed: int = 0,
) -> Report:
    """Compare the pooled views of two inputs of the party outside the coalition.

    ``ST`` pools S and T against C's data (d1 vs d2, same encoding ``e1``);
    ``SC`` pools S and C against T's encoding (e1 vs e2, same data ``d1``).
    The victim's randomness (keys, detour bits, its AND-BOX share) is
    enumerated exhaustively; the coalition's randomness is enumerated too,
    or sampled when ``coalition_assignments`` is given.  ``fix_victim_key``
    pins the victim's key to a random value as a negative control.
    """
    if coalition not in SNAPSHOTS:
        raise ValueError(f"coalition must be 'ST' or 'SC', got {coalition!r}")
    if circuit.workspace:
        raise ValueError("collusion checks take a plain circuit slice without workspace wires")
    n, m = circuit.n, circuit.m
    e1 = e1 if e1 is not None else "0" * m
    e2 = e2 if e2 is not None else e1
    d1s, d2s = _as_state(d1), _as_state(d2 if d2 is not None else d1)
    if coalition == "ST":
        cases = [(d1s, e1), (d2s, e1)]
    else:
        cases = [(d1s, e1), (d1s, e2)]

    key_bits, r_bits = _randomness_space(circuit)
    rng = np.random.default_rng(seed)
    fixed_key = tuple(int(b) for b in rng.integers(0, 2, size=key_bits)) if fix_victim_key else None
    victim_key_bits = 0 if fix_victim_key else key_bits
    victim_terms = 2 ** (victim_key_bits + r_bits + circuit.r_count)
    if victim_terms > MAX_TERMS:
        raise AnalysisSizeError(f"victim randomness has {victim_terms} assignments (limit {MAX_TERMS})")

    def victim_assignments():
        for kb in itertools.product((0, 1), repeat=victim_key_bits):
            for rb in itertools.product((0, 1), repeat=r_bits):
                for alphas in itertools.product((0, 1), repeat=circuit.r_count):
                    yield (fixed_key or kb) + rb, alphas

    total_coalition = key_bits + r_bits
    if coalition_assignments is None:
        coal = [tuple(b) for b in itertools.product((0, 1), repeat=total_coalition)]
    else:
        coal = [tuple(int(b) for b in rng.integers(0, 2, size=total_coalition)) for _ in range(coalition_assignments)]

    report = Report("collusion-p2", {
        "coalition": coalition, "n": n, "m": m, "r_gates": circuit.r_count,
        "victim_terms": victim_terms, "coalition_terms": len(coal),
        "fixed_victim_key": fix_victim_key, "inputs": [_label(*c) for c in [(d1, e1), (d2 if coalition == "ST" else d1, e2)]],
    })
    worst = {name: 0.0 for name in SNAPSHOTS[coalition]}
    for cbits in coal:
        v1 = coalition_view(circuit, cases[0][0], cases[0][1], coalition, cbits, victim_assignments())
        v2 = coalition_view(circuit, cases[1][0], cases[1][1], coalition, cbits, victim_assignments())
        for name in worst:
            worst[name] = max(worst[name], cq_distance(v1[name], v2[name]))
    for name, dist in worst.items():
        report.distances.append({"snapshot": name, "max_distance": dist})
    report.passed = all(v <= EXACT_TOL for v in worst.values())
    return report


# -- weak verifiability -------------------------------------------------------

def is_prime(k: int) -> bool:
    """Deterministic Miller-Rabin, exact for k < 3.3e24."""
    if k < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if k % p == 0:
            return k == p
    d, s = k - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, k)
        if x in (1, k - 1):
            continue
        for _ in range(s - 1):
            x = x * x % k
            if x == k - 1:
                break
        else:
            return False
    return True


def factoring_checker(x: int, output: tuple[int, int]) -> bool:
    p, q = output
    return p * q == x and is_prime(p) and is_prime(q)


def verify_weak(x, output, predicate: Callable = factoring_checker) -> bool:
    return bool(predicate(x, output))


def random_semiprimes(count: int, limit: int, seed: int = 0) -> list[tuple[int, int, int]]:
    rng = np.random.default_rng(seed)
    primes = [p for p in range(2, int(math.isqrt(limit)) * 4) if is_prime(p)]
    out = []
    while len(out) < count:
        p, q = (int(v) for v in rng.choice(primes, size=2))
        if p * q <= limit and (p * q) not in [o[0] for o in out]:
            out.append((p * q, min(p, q), max(p, q)))
    return out


def weak_verify_sweep(count: int = 20, limit: int = 10**6, seed: int = 0) -> Report:
    """Correct factorisations accepted, every swept wrong pair rejected."""
    report = Report("weak-verify", {"count": count, "limit": limit, "seed": seed})
    ok = True
    for x, p, q in random_semiprimes(count, limit, seed):
        accepted = verify_weak(x, (p, q)) and verify_weak(x, (q, p))
        wrong_accepted = 0
        swept = 0
        for a in range(1, math.isqrt(x) + 2):
            base = x // a
            for b in (base - 1, base, base + 1):
                for pair in ((a, b), (b, a)):
                    if sorted(pair) == [p, q]:
                        continue
                    swept += 1
                    wrong_accepted += verify_weak(x, pair)
        ok &= accepted and wrong_accepted == 0
        report.distances.append({"x": x, "p": p, "q": q, "correct_accepted": accepted,
                                 "wrong_pairs": swept, "wrong_accepted": wrong_accepted})
    report.passed = ok
    return report
