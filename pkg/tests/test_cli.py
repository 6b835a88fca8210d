import json

import pytest

from tbqc import cli
from tbqc.transport import ProtocolViolation


@pytest.fixture
def prog(tmp_path):
    p = tmp_path / "x.prog"
    p.write_text("X 0\nR 0\n")
    return p


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    code = cli.main(["run", *args, "--output-dir", str(out)])
    return code, out


def test_run_protocol2_summary(prog, tmp_path):
    code, out = run(["--protocol", "2", "--n", "1", "--slots", "1", "--program", str(prog), "--data", "0", "--seed", "7"], tmp_path)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["fidelity"] == pytest.approx(1.0)
    assert summary["andbox_calls"] == summary["r_gates_total"] == 2 * summary["r_gates_per_round"]
    assert (out / "transcript.jsonl").read_text()


def test_run_reproducible(prog, tmp_path):
    args = ["--n", "1", "--program", str(prog), "--data", "1", "--seed", "99"]
    _, a = run(args, tmp_path, "a")
    _, b = run(args, tmp_path, "b")
    assert (a / "transcript.jsonl").read_bytes() == (b / "transcript.jsonl").read_bytes()


def test_run_protocol1(tmp_path):
    pat = tmp_path / "x.pat"
    pat.write_text("0\n4\n")
    code, out = run(["--protocol", "1", "--program", str(pat), "--data", "+", "--seed", "3"], tmp_path)
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["fidelity"] == pytest.approx(1.0)


def test_output_dir_from_env(prog, tmp_path, monkeypatch):
    monkeypatch.setenv("TBQC_OUTPUT_DIR", str(tmp_path / "env"))
    assert cli.main(["run", "--program", str(prog), "--data", "0"]) == 0
    assert (tmp_path / "env" / "summary.json").exists()


@pytest.mark.parametrize("args", [
    ["--program", "missing.prog"],
    ["--data", "2"],
    ["--n", "0"],
    ["--m", "4"],
    ["--slots", "3", "--n", "2", "--data", "00"],
    ["--seed", "-1"],
    ["--protocol", "5"],
])
def test_run_config_errors(args, prog, tmp_path):
    base = ["--program", str(prog)]
    assert cli.main(["run", *base, *args, "--output-dir", str(tmp_path)]) == 2


def test_bad_program_text(tmp_path):
    p = tmp_path / "bad.prog"
    p.write_text("JUMP 0\n")
    assert cli.main(["run", "--program", str(p), "--output-dir", str(tmp_path)]) == 2


def test_protocol_violation_exit_code(prog, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise ProtocolViolation("forged")

    monkeypatch.setattr(cli.Protocol2Session, "run", boom)
    assert cli.main(["run", "--program", str(prog), "--output-dir", str(tmp_path)]) == 3


def test_verify(capsys):
    assert cli.main(["verify", "key-algebra"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    assert cli.main(["verify", "bogus"]) == 2


def test_analyze(tmp_path, capsys):
    out = str(tmp_path)
    assert cli.main(["analyze", "blindness", "--n", "1", "--m", "1", "--output-dir", out]) == 0
    doc = json.loads((tmp_path / "blindness.json").read_text())
    assert doc["pass"] and all(v <= 1e-10 for row in doc["distances"] for k, v in row.items() if k != "input" and k != "pair")
    assert cli.main(["analyze", "collusion-break-p1", "--data", "1", "--output-dir", out]) == 0
    assert json.loads((tmp_path / "collusion-break-p1.json").read_text())["distances"][0]["recovered"] == 1
    assert cli.main(["analyze", "weak-verify", "--x", "15", "--out", "3,5", "--output-dir", out]) == 0
    assert cli.main(["analyze", "weak-verify", "--x", "15", "--out", "3,4", "--output-dir", out]) == 1
    assert cli.main(["analyze", "collusion-p2", "--output-dir", out]) == 0
    assert cli.main(["analyze", "nonsense", "--output-dir", out]) == 2


def test_unknown_command():
    assert cli.main(["frobnicate"]) == 2
