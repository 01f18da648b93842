import json
import re

import pytest

from drlab.cli import main


def run(capsys, *argv):
    status = main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def test_verify_spin3(capsys):
    status, out, _ = run(capsys, "verify", "--model", "3spin", "--genus", "2", "--pmax", "2")
    assert status == 0 and "FAIL" not in out


def test_verify_perturbed(capsys):
    status, out, _ = run(capsys, "verify", "--model", "3spin-perturbed", "--genus", "2", "--format", "json")
    data = json.loads(out)
    assert status == 1 and not data["passed"]
    assert any(c.get("witness") for c in data["checks"] if c["status"] == "fail")


def test_standard_compare(capsys):
    status, out, _ = run(capsys, "standard-compare", "--s", "1,0,0,0", "--gmax", "2", "--format", "json")
    rows = json.loads(out)["rows"]
    assert status == 0
    assert [r for r in rows if r["monomial"] == "alpha[2, 2]"][0]["got"] == "-1/120"


@pytest.mark.parametrize("argv", [
    ["recurse", "--model", "trivial", "--pmax", "1"],
    ["tau-check", "--model", "3spin", "--genus", "1", "--pmax", "1"],
    ["correlators", "--gmax", "1", "--tdeg", "3"],
    ["trees", "--genus", "1", "--n", "2", "--m", "2"],
    ["genus1", "--model", "4spin"],
    ["verify", "--model", "rank1(1)", "--genus", "2", "--pmax", "1"],
])
def test_subcommands_are_deterministic_and_exact(capsys, argv):
    status, first, _ = run(capsys, *argv, "--format", "json")
    _, second, _ = run(capsys, *argv, "--format", "json")
    assert status == 0 and first == second
    json.loads(first)
    assert not re.search(r"\d\.\d", first)
    status, text, _ = run(capsys, *argv)
    assert status == 0 and text.strip()


def test_config_file_and_output(tmp_path, capsys):
    cfg = tmp_path / "job.json"
    model = {"name": "kdv", "rank": 1, "eta": [["1"]],
             "seed": "1/6*u[1,0]^3 - 1/24*eps^2*u[1,1]^2 - 1/24*I*hbar*u[1,0]"}
    cfg.write_text(json.dumps({"command": "verify", "model": model, "genusCap": 2, "pMax": 1, "format": "json"}))
    out = tmp_path / "report.json"
    status, printed, _ = run(capsys, "verify", "--config", str(cfg), "--output", str(out))
    assert status == 0 and printed == ""
    assert json.loads(out.read_text(encoding="utf-8"))["model"] == "kdv"


@pytest.mark.parametrize("argv, message", [
    (["verify", "--model", "nope"], "unknown model"),
    (["correlators", "--gmax", "1", "--tdeg", "2", "--dsum", "40"], "cap exceeded"),
    (["trees", "--m", "0"], "must be positive"),
    (["standard-compare", "--s", "1,x"], "bad parameter"),
    (["standard-compare", "--gmax", "7"], "g_max"),
    (["trees", "--genus", "0", "--n", "1"], "2g - 2"),
])
def test_usage_errors(capsys, argv, message):
    status, _, err = run(capsys, *argv)
    assert status == 2 and message in err


def test_malformed_polynomial(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"model": {"rank": 1, "eta": [[1]], "seed": "u[1,0] +* 3"}}))
    status, _, err = run(capsys, "verify", "--config", str(cfg))
    assert status == 2 and "malformed polynomial" in err


def test_config_for_another_command(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "trees"}))
    status, _, err = run(capsys, "verify", "--config", str(cfg))
    assert status == 2 and "config is for" in err


def test_unknown_command():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    assert main([]) == 2
