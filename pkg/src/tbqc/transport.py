"""Messages, transcripts and seeded per-party randomness shared by both protocols."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .andbox import AndBoxRecord
from .quantum import StateVector

PARTIES = ("C", "S", "T")


class ProtocolViolation(RuntimeError):
    """A party or message broke the protocol's ordering or ownership rules."""


@dataclass(frozen=True)
class Message:
    seq: int
    sender: str
    receiver: str
    kind: str  # quantum | classical | notify
    step_tag: str
    label: str | None = None
    bits: tuple[int, ...] | None = None
    wires: tuple[int, ...] | None = None

    def to_json(self) -> dict:
        out = {"seq": self.seq, "from": self.sender, "to": self.receiver, "kind": self.kind, "step_tag": self.step_tag}
        if self.label is not None:
            out["label"] = self.label
        if self.bits is not None:
            out["bits"] = list(self.bits)
        if self.wires is not None:
            out["wires"] = list(self.wires)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Message":
        return cls(
            obj["seq"], obj["from"], obj["to"], obj["kind"], obj["step_tag"],
            obj.get("label"),
            tuple(obj["bits"]) if "bits" in obj else None,
            tuple(obj["wires"]) if "wires" in obj else None,
        )


@dataclass
class Transcript:
    messages: list[Message] = field(default_factory=list)
    andbox_log: list[AndBoxRecord] = field(default_factory=list)
    final_owner: tuple[str, ...] = ()

    def seen_by(self, party: str) -> list[Message]:
        return [m for m in self.messages if m.receiver in (party, "*")]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(m.to_json(), sort_keys=True) + "\n" for m in self.messages)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    @staticmethod
    def read_messages(path: str | Path) -> list[Message]:
        return [Message.from_json(json.loads(line)) for line in Path(path).read_text().splitlines() if line]


class Network:
    """Orchestrator-side channel: logs every message and moves wire ownership."""

    def __init__(self, transcript: Transcript | None = None, record_notify: bool = True):
        self.transcript = transcript if transcript is not None else Transcript()
        self.record_notify = record_notify

    def _log(self, **kw) -> Message:
        msg = Message(seq=len(self.transcript.messages), **kw)
        self.transcript.messages.append(msg)
        return msg

    def send_quantum(self, state: StateVector, sender: str, receiver: str, wires: Iterable[int], tag: str) -> StateVector:
        wires = tuple(wires)
        for w in wires:
            if state.owner[w] != sender:
                raise ProtocolViolation(f"{sender} tried to send wire {w} owned by {state.owner[w]} ({tag})")
        self._log(sender=sender, receiver=receiver, kind="quantum", step_tag=tag, wires=wires)
        return state.with_owner(wires, receiver)

    def send_classical(self, sender: str, receiver: str, label: str, bits: Sequence[int], tag: str) -> tuple[int, ...]:
        bits = tuple(int(b) for b in bits)
        self._log(sender=sender, receiver=receiver, kind="classical", step_tag=tag, label=label, bits=bits)
        return bits

    def notify(self, sender: str, label: str, wires: Sequence[int], tag: str) -> None:
        if self.record_notify:
            self._log(sender=sender, receiver="*", kind="notify", step_tag=tag, label=label, wires=tuple(wires))


class BitSource:
    """Uniform bits from a numpy generator."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def bits(self, k: int) -> tuple[int, ...]:
        return tuple(int(b) for b in self.rng.integers(0, 2, size=k))

    def integers(self, low: int, high: int, size: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.rng.integers(low, high, size=size))


class ScriptedBits:
    """Replays a fixed bit sequence; used to enumerate a party's randomness exhaustively."""

    def __init__(self, values: Sequence[int]):
        self.values = list(values)
        self.pos = 0

    def bits(self, k: int) -> tuple[int, ...]:
        return self.integers(0, 2, k)

    def integers(self, low: int, high: int, size: int) -> tuple[int, ...]:
        if self.pos + size > len(self.values):
            raise ProtocolViolation("scripted randomness exhausted")
        out = tuple(self.values[self.pos:self.pos + size])
        if any(not low <= v < high for v in out):
            raise ValueError(f"scripted values {out} outside [{low}, {high})")
        self.pos += size
        return out


def party_streams(seed: int, names: Sequence[str] = ("C", "S", "T", "ANDBOX")) -> dict[str, np.random.Generator]:
    """Independent generators per party, all derived from one session seed."""
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}
