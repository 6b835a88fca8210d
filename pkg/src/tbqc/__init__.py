"""Simulator and verification harness for tripartite blind quantum computation."""

from .andbox import IdealAndBox, ScriptedAndBox
from .keys import PauliKey, update_key, update_key_clifford, update_key_r
from .protocol1 import BrickworkLayout, Protocol1Session
from .protocol2 import Protocol2Session, run_session
from .quantum import Gate, StateVector, apply_gate, fidelity, trace_distance
from .uqc import Instruction, Program, build_uqc, verify_definition5

__version__ = "0.1.0"

__all__ = [
    "BrickworkLayout",
    "Gate",
    "IdealAndBox",
    "Instruction",
    "PauliKey",
    "Program",
    "Protocol1Session",
    "Protocol2Session",
    "ScriptedAndBox",
    "StateVector",
    "apply_gate",
    "build_uqc",
    "fidelity",
    "run_session",
    "trace_distance",
    "update_key",
    "update_key_clifford",
    "update_key_r",
    "verify_definition5",
]
