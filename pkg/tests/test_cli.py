import csv
import io
import json
import os
import subprocess
import sys

import pytest

from bes3.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, EXIT_USAGE, main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_density_rows(capsys):
    code, out, _ = run(["density", "--r", "1", "--t-min", "1", "--t-max", "2", "--points", "2"],
                       capsys)
    assert code == EXIT_OK
    table = rows(out)
    assert table[0] == ["t", "p"]
    assert [float(r[0]) for r in table[1:]] == [1.0, 2.0]
    assert float(table[1][1]) == pytest.approx(0.156972, abs=1e-6)


def test_density_bad_range(capsys):
    code, _, err = run(["density", "--t-min", "2", "--t-max", "1"], capsys)
    assert code == EXIT_USAGE and "--t-min" in err


def test_laplace_numeric_column(capsys):
    code, out, _ = run(["laplace", "--lambda-max", "2", "--points", "3", "--numeric"], capsys)
    assert code == EXIT_OK
    table = rows(out)
    assert table[0] == ["lambda", "laplace", "numeric"]
    for _, closed, numeric in table[1:]:
        assert float(closed) == pytest.approx(float(numeric), abs=1e-8)
    assert float(table[1][1]) == 1.0


def test_figure1_start_and_determinism(capsys):
    _, a, _ = run(["figure1", "--seed", "3", "--steps", "50"], capsys)
    _, b, _ = run(["figure1", "--seed", "3", "--steps", "50"], capsys)
    assert a == b
    table = rows(a)
    assert table[0] == ["k", "value"] and table[1] == ["0", "6"]
    assert len(table) == 52


@pytest.mark.parametrize("method", ["norm3d", "euler", "williams"])
def test_simulate_byte_identical(method, capsys):
    argv = ["simulate", "--method", method, "--paths", "3", "--horizon", "0.1", "--dt", "0.01",
            "--seed", "5"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b
    table = rows(a)
    assert table[0] == ["path_id", "t", "value"]
    first = [r for r in table[1:] if r[0] == "0"]
    assert float(first[0][1]) == 0.0 and float(first[0][2]) == 1.0


def test_simulate_summary_mode(capsys):
    code, out, _ = run(["simulate", "--paths", "4", "--horizon", "0.1", "--dt", "0.01",
                        "--summary-only"], capsys)
    assert code == EXIT_OK
    table = rows(out)
    assert table[0] == ["path_id", "terminal", "min", "argmin_time"] and len(table) == 5
    for _, term, lo, _ in table[1:]:
        assert 0 < float(lo) <= float(term)


def test_dt_zero_is_usage_error(capsys):
    code, _, err = run(["simulate", "--dt", "0"], capsys)
    assert code == EXIT_USAGE and "--dt" in err


def test_dt_above_horizon_is_usage_error(capsys):
    code, _, err = run(["simulate", "--dt", "2", "--horizon", "1"], capsys)
    assert code == EXIT_USAGE and "dt" in err


def test_unknown_scenario_and_mutation(capsys):
    assert run(["verify", "--scenario", "bogus"], capsys)[0] == EXIT_USAGE
    assert run(["verify", "--mutation", "bogus"], capsys)[0] == EXIT_USAGE
    assert run(["verify", "--paths", "10"], capsys)[0] == EXIT_USAGE


def test_unwritable_output_is_io_error(tmp_path, capsys):
    code, _, err = run(["density", "--out", str(tmp_path / "missing" / "x.csv")], capsys)
    assert code == EXIT_IO and "I/O error" in err


def test_output_to_file(tmp_path, capsys):
    target = tmp_path / "d.csv"
    assert run(["density", "--points", "5", "--out", str(target)], capsys)[0] == EXIT_OK
    assert len(rows(target.read_text())) == 6


def test_verify_pass_and_fail_exit_codes(capsys):
    code, out, err = run(["verify", "--scenario", "doob_scalar", "--seed", "7"], capsys)
    assert code == EXIT_OK and json.loads(out)["passed"] and "doob_scalar" in err
    code, out, _ = run(["verify", "--scenario", "doob_scalar", "--mutation", "biased_u"], capsys)
    assert code == EXIT_FAIL and not json.loads(out)["passed"]


def test_verify_text_and_sweep(capsys):
    code, out, _ = run(["verify", "--scenario", "g_matches_hitting", "--format", "text",
                        "--seeds", "2"], capsys)
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("seed=7 PASS")
    assert out.splitlines()[1].startswith("seed=8 PASS")


def _cli(args, threads):
    env = dict(os.environ, BES3_THREADS=str(threads))
    return subprocess.run([sys.executable, "-m", "bes3", *args], capture_output=True, text=True,
                          env=env, check=False)


def test_verify_json_independent_of_threads():
    args = ["verify", "--scenario", "marginal_agreement", "--paths", "300", "--seed", "7"]
    one, four = _cli(args, 1), _cli(args, 4)
    assert one.returncode == four.returncode
    assert one.stdout == four.stdout and one.stdout


def test_bad_thread_setting_is_usage_error():
    res = _cli(["density", "--points", "2"], "zero")
    assert res.returncode == EXIT_USAGE and "BES3_THREADS" in res.stderr
