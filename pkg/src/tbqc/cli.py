"""Command-line front end: ``tbqc run | verify | analyze``.

Exit codes: 0 success, 1 a check failed, 2 configuration error,
3 protocol violation.
"""
from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .protocol1 import (
    BrickworkLayout,
    Protocol1Session,
    collusion_break_demo,
    mbqc_oracle,
    named_pattern,
    parse_pattern,
)
from .protocol2 import Protocol2Session
from .quantum import Gate, QuantumError, StateVector, apply_gates, fidelity
from .suites import SUITES, run_suite
from .transport import ProtocolViolation
from .uqc import Circuit, CircuitSizeError, ProgramError, build_uqc, encode_program, parse_program

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_VIOLATION = 0, 1, 2, 3
CHECKS = ("blindness", "collusion-p2", "collusion-break-p1", "weak-verify")


class ConfigError(ValueError):
    pass


@dataclass
class SessionConfig:
    protocol: int
    n: int
    m: int | None
    slots: int
    seed: int
    program: Path
    data: str
    output_dir: Path
    layout: str = "linear"

    def validate(self) -> None:
        if self.protocol not in (1, 2):
            raise ConfigError("--protocol must be 1 or 2")
        for name in ("n", "slots"):
            if getattr(self, name) < 1:
                raise ConfigError(f"--{name} must be positive")
        if self.m is not None and self.m < 1:
            raise ConfigError("--m must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
        if not self.program.is_file():
            raise ConfigError(f"program file not found: {self.program}")


def parse_data(text: str, width: int) -> StateVector:
    """Product state from characters 0, 1, + and - (wire 0 first)."""
    s = 1 / np.sqrt(2)
    singles = {"0": [1, 0], "1": [0, 1], "+": [s, s], "-": [s, -s]}
    if len(text) != width or any(c not in singles for c in text):
        raise ConfigError(f"--data must be {width} characters from 0, 1, +, -; got {text!r}")
    vec = np.ones(1, dtype=complex)
    for c in text:
        vec = np.kron(np.array(singles[c], dtype=complex), vec)
    return StateVector(vec)


def _output_dir(arg: str | None) -> Path:
    raw = arg or os.environ.get("TBQC_OUTPUT_DIR") or "tbqc-out"
    return Path(raw)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- run ----------------------------------------------------------------------------

def _run_protocol2(cfg: SessionConfig) -> tuple[dict, object]:
    try:
        prog = parse_program(cfg.program.read_text(), cfg.n)
        circuit = build_uqc(cfg.n, cfg.slots)
    except (ProgramError, CircuitSizeError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.m is not None and cfg.m != circuit.m:
        raise ConfigError(f"--m {cfg.m} does not match the encoding width {circuit.m} for n={cfg.n}, slots={cfg.slots}")
    d = parse_data(cfg.data, cfg.n)
    encodings = [encode_program(b) for b in prog.blocks(cfg.slots)]
    if not encodings:
        raise ConfigError("program has no instructions")
    out, transcript = Protocol2Session(circuit, cfg.seed).run(d, encodings)
    want = apply_gates(d, prog.gates())
    summary = {
        "protocol": 2,
        "n": cfg.n,
        "m": circuit.m,
        "slots": cfg.slots,
        "rounds": len(encodings),
        "wires": circuit.wire_count,
        "gates_per_round": circuit.k,
        "r_gates_per_round": circuit.r_count,
        "r_gates_total": circuit.r_count * len(encodings),
        "andbox_calls": len(transcript.andbox_log),
        "fidelity": fidelity(out, want),
    }
    return summary, transcript


def _run_protocol1(cfg: SessionConfig) -> tuple[dict, object]:
    try:
        pattern = parse_pattern(cfg.program.read_text())
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = cfg.m if cfg.m is not None else len(pattern[0])
    columns = len(pattern)
    layout = BrickworkLayout.brickwork(columns, rows) if cfg.layout == "brickwork" else BrickworkLayout.linear(columns, rows)
    d = parse_data(cfg.data, rows)
    try:
        result = Protocol1Session(layout, pattern, cfg.seed).run(d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    summary = {
        "protocol": 1,
        "rows": rows,
        "columns": columns,
        "layout": cfg.layout,
        "fidelity": fidelity(result.output, mbqc_oracle(d, layout, pattern)),
        "andbox_calls": 0,
    }
    return summary, result.transcript


def cmd_run(cfg: SessionConfig) -> int:
    cfg.validate()
    if cfg.protocol == 2:
        summary, transcript = _run_protocol2(cfg)
    else:
        summary, transcript = _run_protocol1(cfg)
    summary["seed"] = cfg.seed
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    transcript.write(cfg.output_dir / "transcript.jsonl")
    _write_json(cfg.output_dir / "summary.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# -- verify ---------------------------------------------------------------------------

def cmd_verify(suite: str) -> int:
    if suite != "all" and suite not in SUITES:
        print(f"unknown suite {suite!r}; choose from {', '.join([*SUITES, 'all'])}", file=sys.stderr)
        return EXIT_CONFIG
    checks = run_suite(suite)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


# -- analyze ---------------------------------------------------------------------------

def _collusion_circuit(n: int, m: int, r_gates: int) -> Circuit:
    """Small slice: a CNOT from the encoding into the data, optional R, then H."""
    gates = [Gate("CNOT", (n, 0)), Gate("H", (0,))]
    if r_gates:
        gates.insert(1, Gate("R", (0,)))
    return Circuit(tuple(gates), n, m)


def cmd_analyze(args) -> int:
    check = args.check
    if check not in CHECKS:
        print(f"unknown check {check!r}; choose from {', '.join(CHECKS)}", file=sys.stderr)
        return EXIT_CONFIG
    if check == "blindness":
        ds = ["".join(b) for b in _bitstrings(args.n)]
        es = ["".join(b) for b in _bitstrings(args.m)]
        inputs = [(d, e) for d in ds for e in es]
        mode = "exhaustive" if args.n + args.m <= 4 else "sampled"
        report = analysis.blindness_twirl_check(inputs, key_space=mode, seed=args.seed)
    elif check == "collusion-p2":
        circuit = _collusion_circuit(args.n, args.m, args.r_gates)
        zero = "0" * args.n
        one = "1" + "0" * (args.n - 1)
        if args.coalition == "ST":
            report = analysis.collusion_view_check_p2(zero, one, circuit, coalition="ST", seed=args.seed)
        else:
            e1, e2 = "0" * args.m, "1" + "0" * (args.m - 1)
            report = analysis.collusion_view_check_p2(zero, None, circuit, e1, e2, coalition="SC", seed=args.seed)
    elif check == "collusion-break-p1":
        bit = int(args.data) if args.data in ("0", "1") else None
        if bit is None:
            print("--data must be 0 or 1", file=sys.stderr)
            return EXIT_CONFIG
        layout = BrickworkLayout.linear(args.columns)
        res = Protocol1Session(layout, named_pattern("identity", args.columns), args.seed).run(StateVector.basis([bit]))
        brk = collusion_break_demo(res)
        report = analysis.Report("collusion-break-p1", {"data": bit, "columns": args.columns, "seed": args.seed})
        report.distances.append({"recovered": brk.recovered_input[0]})
        report.passed = brk.recovered_input == [bit]
    else:
        if args.x is None:
            report = analysis.weak_verify_sweep(seed=args.seed)
        else:
            try:
                p, q = (int(v) for v in args.out.split(","))
            except (AttributeError, ValueError):
                print("--out must be two comma-separated integers", file=sys.stderr)
                return EXIT_CONFIG
            ok = analysis.verify_weak(args.x, (p, q))
            report = analysis.Report("weak-verify", {"x": args.x, "output": [p, q]})
            report.distances.append({"accept": ok})
            report.passed = ok
    path = _output_dir(args.output_dir) / f"{check}.json"
    _write_json(path, report.to_json())
    print(report.dumps())
    return EXIT_OK if report.passed else EXIT_FAIL


def _bitstrings(k: int):
    return itertools.product("01", repeat=k)


# -- entry point ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tbqc", description="Tripartite blind quantum computation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one protocol session")
    run.add_argument("--protocol", type=int, default=2, choices=(1, 2))
    run.add_argument("--n", type=int, default=1, help="data wires (protocol 2)")
    run.add_argument("--m", type=int, default=None, help="encoding width (protocol 2) or rows (protocol 1)")
    run.add_argument("--slots", type=int, default=1, help="instructions per encoding")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--program", type=Path, required=True, help="program (protocol 2) or pattern (protocol 1) file")
    run.add_argument("--data", default=None, help="input as 0/1/+/- characters, wire 0 first")
    run.add_argument("--layout", choices=("linear", "brickwork"), default="linear")
    run.add_argument("--output-dir", default=None)

    ver = sub.add_parser("verify", help="run an invariant suite")
    ver.add_argument("suite", help=f"one of {', '.join([*SUITES, 'all'])}")

    ana = sub.add_parser("analyze", help="run a security analysis check")
    ana.add_argument("check", help=f"one of {', '.join(CHECKS)}")
    ana.add_argument("--n", type=int, default=1)
    ana.add_argument("--m", type=int, default=1)
    ana.add_argument("--seed", type=int, default=0)
    ana.add_argument("--coalition", choices=("ST", "SC"), default="ST")
    ana.add_argument("--r-gates", type=int, choices=(0, 1), default=0)
    ana.add_argument("--data", default="1")
    ana.add_argument("--columns", type=int, default=2)
    ana.add_argument("--x", type=int, default=None)
    ana.add_argument("--out", default=None, help="candidate factor pair p,q")
    ana.add_argument("--output-dir", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "run":
            data = args.data
            if data is None:
                data = "0" * (args.n if args.protocol == 2 else (args.m or 1))
            cfg = SessionConfig(
                args.protocol, args.n, args.m, args.slots, args.seed, args.program, data,
                _output_dir(args.output_dir), args.layout,
            )
            return cmd_run(cfg)
        if args.command == "verify":
            return cmd_verify(args.suite)
        return cmd_analyze(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolViolation as exc:
        print(f"protocol violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (QuantumError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
