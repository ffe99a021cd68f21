import csv
import io
import json
import math
import os
from pathlib import Path
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from torsionstab.catalog import oscillator_tau_squared
from torsionstab.cli import (InputError, dump_json, format_matrix_document, main, parse_matrix_document,
                             write_matrix_document)

ROOT = Path(__file__).resolve().parents[1]
FIX = ROOT / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def matrix_file(tmp_path, A, label=None, name="m.json"):
    p = tmp_path / name
    write_matrix_document(p, A, label)
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


# ---- matrix documents

def test_parse_document():
    A, label = parse_matrix_document('{"n": 2, "rows": [[1, 2], [3, 4.5]], "label": "x"}')
    np.testing.assert_array_equal(A, [[1, 2], [3, 4.5]])
    assert label == "x"


@pytest.mark.parametrize("text,where", [
    ('{"n": 2, "rows": [[1, 2], [3]]}', "1:10"),
    ('{\n  "n": 2,\n  "rows": [[1, 2]]\n}', "3:3"),
    ('{"n": 0, "rows": []}', "1:2"),
    ('{"n": 1, "rows": [["a"]]}', "1:10"),
    ('{"n": 1, "rows": [[1]]', "1:"),
    ('[1, 2]', "1:1"),
])
def test_malformed_documents_report_position(text, where):
    with pytest.raises(InputError, match=f"<input>:{where}"):
        parse_matrix_document(text)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 6), data=st.data())
def test_round_trip_is_bit_identical(n, data):
    A = data.draw(arrays(np.float64, (n, n), elements=st.floats(allow_nan=False, allow_infinity=False)))
    B, _ = parse_matrix_document(format_matrix_document(A, "lbl"))
    assert B.tobytes() == A.tobytes() or np.array_equal(B, A)  # -0.0 and 0.0 compare equal
    assert np.array_equal(np.signbit(B), np.signbit(A))


def test_dump_json_precision_and_nonfinite():
    s = dump_json({"a": 0.1, "b": [math.inf, math.nan, 1], "c": True})
    d = json.loads(s)
    assert d == {"a": 0.1, "b": [None, None, 1], "c": True}
    assert "0.10000000000000001" in s


# ---- analyze

def test_analyze_example1(tmp_path, capsys):
    out_json = tmp_path / "r.json"
    code, out, _ = run(["analyze", str(FIX / "paper_ex1.json"), "--samples", "8", "--out", str(out_json)], capsys)
    assert code == 0
    rep = json.loads(out_json.read_text())
    assert rep["histograms"]["kappa_3"] == {"TendsToInfinity": 8}
    assert rep["geometric"]["verdict"] == "AsymptoticallyStable"
    assert rep["consistent"] is True
    assert "consistent: True" in out


def test_analyze_oscillator(capsys):
    code, out, _ = run(["analyze", str(FIX / "oscillator.json"), "--samples", "8"], capsys)
    assert code == 0
    assert "tau: NoLimitBounded" in out
    assert "geometric: Stable" in out and "oracle: Stable" in out


def test_analyze_scalar(tmp_path, capsys):
    code, out, _ = run(["analyze", matrix_file(tmp_path, [[-1.0]]), "--samples", "2"], capsys)
    assert code == 0
    assert "oracle: AsymptoticallyStable" in out
    assert "geometric: Inconclusive" in out
    assert "tau:" not in out


def test_analyze_malformed_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"n": 2, "rows": [[1, 2]]}')
    code, _, err = run(["analyze", str(p)], capsys)
    assert code == 1 and "bad.json:1:" in err


def test_analyze_missing_file(capsys):
    code, _, err = run(["analyze", "/nonexistent/x.json"], capsys)
    assert code == 1 and "error" in err


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    f = matrix_file(tmp_path, np.diag([-1.0, -2.0, -2.5]))
    outs = {}
    for env, flag in [("7", []), (None, ["--seed", "7"]), ("99", ["--seed", "7"])]:
        if env is None:
            monkeypatch.delenv("TORSIONSTAB_SEED", raising=False)
        else:
            monkeypatch.setenv("TORSIONSTAB_SEED", env)
        o = tmp_path / f"o{len(outs)}.json"
        assert main(["analyze", f, "--samples", "3", "--out", str(o)] + flag) == 0
        outs[len(outs)] = o.read_text()
    capsys.readouterr()
    assert outs[0] == outs[1] == outs[2]


# ---- trace

def test_trace_golden_header(capsys):
    code, out, _ = run(["trace", str(FIX / "oscillator.json"), "--r0", "1,2,1,2", "--points", "20"], capsys)
    assert code == 0
    header, rows = read_csv(out)
    golden, _ = read_csv((GOLDEN / "trace_header.csv").read_text())
    assert header == golden
    assert len(rows) == 20


def test_trace_oscillator_tau_formula(capsys):
    code, out, _ = run(["trace", str(FIX / "oscillator.json"), "--r0", "1,2,1,2", "--grid", "linear",
                        "--t-start", "0", "--t-end", "10", "--points", "101"], capsys)
    assert code == 0
    header, rows = read_csv(out)
    t = np.array([float(r[0]) for r in rows])
    tau = np.array([float(r[header.index("tau")]) for r in rows])
    assert np.max(np.abs(tau ** 2 - oscillator_tau_squared(t)) / oscillator_tau_squared(t)) <= 1e-8


def test_trace_unit_circle(tmp_path, capsys):
    f = matrix_file(tmp_path, [[0.0, 1.0], [-1.0, 0.0]])
    code, out, _ = run(["trace", f, "--r0", "1,0", "--allow-degenerate"], capsys)
    assert code == 0
    header, rows = read_csv(out)
    assert header == ["t", "logV1", "logV2", "kappa_1", "tau"]
    k = np.array([float(r[3]) for r in rows])
    assert np.max(np.abs(k - 1)) <= 1e-10
    assert all(float(r[4]) == 0.0 for r in rows)


def test_trace_scalar_matrix_tau_zero(tmp_path, capsys):
    f = matrix_file(tmp_path, 3 * np.eye(3))
    code, out, _ = run(["trace", f, "--r0", "1,-2,0.5", "--points", "30", "--t-end", "20"], capsys)
    assert code == 0
    header, rows = read_csv(out)
    assert all(float(r[header.index("tau")]) == 0.0 for r in rows)
    assert all(r[header.index("logV2")] == "-inf" for r in rows)
    # kappa_2 = V1 V3 / (V1 V2^2) is undefined where V2 vanishes
    assert all(r[header.index("kappa_2")] == "" for r in rows)


def test_trace_to_file(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code, stdout, _ = run(["trace", str(FIX / "oscillator.json"), "--r0", "1,2,1,2", "--points", "16",
                           "--out", str(out)], capsys)
    assert code == 0 and stdout == ""
    assert len(out.read_text().splitlines()) == 17


@pytest.mark.parametrize("argv", [
    ["--r0", "1,2,1"],
    ["--r0", "1,x,1,2"],
    ["--r0", "1,0,1,2"],
    [],
    ["--r0", "1,2,1,2", "--quantity", "kappa_9"],
    ["--r0", "1,2,1,2", "--t-start", "0"],
])
def test_trace_input_errors(argv, capsys):
    code, _, err = run(["trace", str(FIX / "oscillator.json")] + argv, capsys)
    assert code == 1 and err


def test_trace_allow_degenerate(capsys):
    code, _, _ = run(["trace", str(FIX / "oscillator.json"), "--r0", "1,0,1,2", "--allow-degenerate",
                      "--points", "16"], capsys)
    assert code == 0


# ---- examples and verify

def test_examples_paper2(capsys):
    code, out, _ = run(["examples", "paper2"], capsys)
    assert code == 0
    assert "tau^2(0)" in out or "tau2(0)" in out or "19/162" in out or "0.117284" in out
    assert "[FAIL]" not in out


@pytest.mark.parametrize("name", ["paper1", "remark1", "remark2", "lemma46"])
def test_examples_pass(name, capsys):
    code, out, _ = run(["examples", name], capsys)
    assert code == 0 and "[FAIL]" not in out


def test_examples_unknown(capsys):
    code, _, err = run(["examples", "paper3"], capsys)
    assert code == 1
    for n in ("paper1", "paper2", "remark1", "remark2", "lemma46"):
        assert n in err


def test_verify_lemmas(capsys):
    code, out, _ = run(["verify", "--suite", "lemmas", "--seed", "42"], capsys)
    assert code == 0
    assert out.strip().splitlines()[-1].endswith("checks passed")


def test_verify_unknown_suite(capsys):
    code, _, _ = run(["verify", "--suite", "nope"], capsys)
    assert code == 1


def test_usage_error_exit_1(capsys):
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 1
    capsys.readouterr()


def test_module_entry_point(tmp_path):
    env = dict(os.environ)
    env.pop("TORSIONSTAB_SEED", None)
    r = subprocess.run([sys.executable, "-m", "torsionstab", "examples", "remark2"], capture_output=True,
                       text=True, env=env)
    assert r.returncode == 0, r.stderr
    assert "remark2" in r.stdout
