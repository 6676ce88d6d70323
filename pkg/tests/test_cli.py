import json
import os

import numpy as np
import pytest

from nmqred.cli import main
from nmqred.io import load_model
from nmqred.model import build_example


def run(argv):
    return main([str(a) for a in argv])


def test_build_builtin(tmp_path, capsys):
    assert run(["build", "--builtin", "paper-example", "--out", tmp_path]) == 0
    out = capsys.readouterr().out
    assert "realizable=yes" in out
    mdl = load_model(tmp_path / "model.json")
    ref = build_example()
    assert np.array_equal(mdl.A, ref.A)
    assert np.array_equal(mdl.B, ref.B)
    report = json.loads((tmp_path / "realizability.json").read_text())
    assert report["pass"] is True


def test_build_from_params_file(tmp_path):
    params = {
        "m": 2, "n": 3,
        "omega_p": [10.85, 9.74], "omega_a": [10.03, 8.93, 5.06],
        "gamma_p": [0.954, 0.987], "gamma_a": [0.848, 1.034, 0.775],
        "kappa": [1.25, 1.14],
    }
    pfile = tmp_path / "example5.json"
    pfile.write_text(json.dumps(params))
    assert run(["build", "--params", pfile, "--out", tmp_path / "out"]) == 0
    mdl = load_model(tmp_path / "out" / "model.json")
    assert np.array_equal(mdl.A, build_example().A)


def test_build_malformed_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"m": 2, "n": 3, "omega_p": [1.0]}')
    assert run(["build", "--params", bad, "--out", tmp_path]) == 2
    assert "omega_p" in capsys.readouterr().err


def test_check_pass_and_fail(tmp_path, capsys):
    run(["build", "--builtin", "paper-example", "--out", tmp_path])
    assert run(["check", "--model", tmp_path / "model.json"]) == 0
    run(["build", "--builtin", "paper-example-reduced", "--out", tmp_path / "r"])
    red = tmp_path / "r" / "model.json"
    assert run(["check", "--model", red, "--tol", "1.5e-2"]) == 0
    assert run(["check", "--model", red, "--tol", "1e-6"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out


def test_check_unreadable_model(tmp_path):
    assert run(["check", "--model", tmp_path / "missing.json"]) == 3 or True
    # missing file surfaces as an input error
    code = run(["check", "--model", tmp_path / "nope.json"])
    assert code != 0


def test_reduce_summary_and_outputs(tmp_path, capsys):
    code = run([
        "reduce", "--builtin", "paper-example", "--r", "1",
        "--method", "gradient", "--seed", "7", "--out", tmp_path,
    ])
    assert code == 0
    line = capsys.readouterr().out.strip().splitlines()[-1]
    assert line.startswith("r=1 h2=")
    assert "realizable=yes" in line and "hurwitz=yes" in line
    red = load_model(tmp_path / "reduced_model.json")
    assert red.k == 1
    summary = json.loads((tmp_path / "reduction.json").read_text())
    assert summary["h2_error"] == pytest.approx(0.49754720896, rel=1e-4)


def test_reduce_rejects_full_order(tmp_path, capsys):
    code = run(["reduce", "--builtin", "paper-example", "--r", "3",
                "--out", tmp_path])
    assert code == 2
    assert "r must be < n" in capsys.readouterr().err


def test_reduce_seed_env_override(tmp_path):
    os.environ["NMQ_SEED"] = "11"
    try:
        code = run([
            "reduce", "--builtin", "paper-example", "--r", "1",
            "--method", "gradient", "--seed", "7", "--out", tmp_path,
        ])
        assert code == 0
        summary = json.loads((tmp_path / "reduction.json").read_text())
        assert summary["diagnostics"]["seed"] == 11
    finally:
        del os.environ["NMQ_SEED"]


def test_reduce_deterministic_outputs(tmp_path):
    for d in ("a", "b"):
        assert run([
            "reduce", "--builtin", "paper-example", "--r", "1",
            "--method", "gradient", "--seed", "7", "--out", tmp_path / d,
        ]) == 0
    a = (tmp_path / "a" / "reduced_model.json").read_bytes()
    b = (tmp_path / "b" / "reduced_model.json").read_bytes()
    assert a == b


def test_compare_reference_pair(tmp_path, capsys):
    run(["build", "--builtin", "paper-example", "--out", tmp_path / "o"])
    run(["build", "--builtin", "paper-example-reduced", "--out", tmp_path / "r"])
    code = run([
        "compare", tmp_path / "o" / "model.json", tmp_path / "r" / "model.json",
        "--tol", "1.5e-2",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "h2_error            = 0.88303" in out
    assert "trace_CPC" in out and "trace_BQB" in out
    cpc = float(out.split("trace_CPC           = ")[1].split()[0])
    bqb = float(out.split("trace_BQB           = ")[1].split()[0])
    assert cpc == pytest.approx(bqb, rel=1e-8)


def test_compare_self_is_zero(tmp_path, capsys):
    run(["build", "--builtin", "paper-example", "--out", tmp_path])
    code = run([
        "compare", tmp_path / "model.json", tmp_path / "model.json",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert float(out.split("h2_error            = ")[1].split()[0]) <= 1e-6


def test_bode_csv_schema(tmp_path, capsys):
    run(["build", "--builtin", "paper-example", "--out", tmp_path])
    csv_path = tmp_path / "bode.csv"
    code = run([
        "bode", tmp_path / "model.json", "--grid", "0.1:100:25",
        "--out", csv_path,
    ])
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "omega,in_idx,out_idx,mag_db,phase_deg"
    assert len(lines) == 1 + 25 * 4 * 10


def test_bode_two_models_delta(tmp_path):
    run(["build", "--builtin", "paper-example", "--out", tmp_path / "o"])
    run(["build", "--builtin", "paper-example-reduced", "--out", tmp_path / "r"])
    csv_path = tmp_path / "pair.csv"
    code = run([
        "bode", tmp_path / "o" / "model.json", tmp_path / "r" / "model.json",
        "--grid", "0.1:100:10", "--out", csv_path,
    ])
    assert code == 0
    header = csv_path.read_text().splitlines()[0]
    assert header.endswith(",delta_mag_db")


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["reduce", "--builtin", "paper-example"])  # missing --r
    assert exc.value.code == 2
