import json
import subprocess
import sys

import pytest

from digraph_sandpile.cli import SUITE_NAMES, main
from digraph_sandpile.experiments import EVENTS
from digraph_sandpile.verify import SUITES


def test_duplicated_names_stay_in_sync():
    # the CLI keeps its own copies so that ``constants`` avoids heavy imports
    assert set(SUITE_NAMES) == set(SUITES)
    from digraph_sandpile import cli

    assert cli.EVENTS == EVENTS


def test_constants(capsys):
    assert main(["constants", "--tol", "1e-6"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(float(out["Q"]["value"]) - 0.4357571) < 1e-6
    assert abs(float(out["cyclic_constant"]["value"]) - 0.9603461) < 1e-6
    assert set(out["Q_p"]) == {"2", "3", "5"}


def test_sample(capsys):
    assert main(["sample", "--n", "3", "--model", "bernoulli", "--q", "0.5", "--seed", "7"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["digraph"]["n"] == 3
    assert set(out["profile"]) == {"total", "vertex_groups", "strongly_connected", "eulerian", "coeulerian"}
    assert main(["sample", "--n", "3", "--seed", "7"]) == 0
    assert json.loads(capsys.readouterr().out) == out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["constants", "--nope"],
        ["constants", "--tol", "-1"],
        ["dist", "--n", "10", "--trials", "5"],
        ["dist", "--n", "10", "--trials", "5", "--primes", "2", "--modulus", "2"],
        ["moment", "--n", "10", "--trials", "5"],
        ["moment", "--n", "10", "--trials", "5", "--modulus", "2", "--group", "4"],
        ["rate", "--n", "10", "--trials", "5", "--primes", "2"],
        ["rate", "--trials", "5"],
        ["rate", "--n", "10", "--trials", "0"],
        ["rate", "--n", "10", "--trials", "5", "--model", "no-such-model"],
        ["sample"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1


def test_malformed_model_file(tmp_path):
    bad = tmp_path / "model.json"
    bad.write_text("{oops")
    assert main(["rate", "--n", "5", "--trials", "2", "--model", str(bad)]) == 1
    bad.write_text(json.dumps({"pmf": {"0": 0.9, "1": 0.1}, "epsilon": 0.5}))
    assert main(["rate", "--n", "5", "--trials", "2", "--model", str(bad)]) == 1


def test_dist_is_reproducible(tmp_path):
    argv = ["dist", "--n", "15", "--trials", "30", "--model", "bernoulli", "--q", "0.5", "--primes", "2", "--seed", "42"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    report = json.loads(a.read_text())
    assert report["kind"] == "distribution" and report["config"]["master_seed"] == 42


def test_config_file_and_flag_override(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"n": 10, "trials": 4, "modulus": 2, "target": "2", "master_seed": 1}))
    assert main(["moment", "--config", str(conf), "--seed", "9"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["config"]["master_seed"] == 9 and report["config"]["target"] == "C2"
    conf.write_text("[1, 2]")
    assert main(["moment", "--config", str(conf)]) == 1


def test_csv_format(capsys):
    assert main(["rate", "--n", "8", "--trials", "5", "--event", "cyclic", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("event,") and lines[1].startswith("cyclic,")


def test_consistency_failure_exits_2(monkeypatch):
    from digraph_sandpile import experiments
    from digraph_sandpile.abelian_groups import from_cyclic_orders

    monkeypatch.setattr(experiments, "tensor_fast", lambda G, a: from_cyclic_orders([a, a, a]))
    assert main(["moment", "--n", "6", "--trials", "2", "--modulus", "2"]) == 2


def test_verify_quick(capsys):
    assert main(["verify", "--quick", "--suite", "smith", "--suite", "groups"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    assert all(ln.startswith("PASS") for ln in lines)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "digraph_sandpile", "constants", "--tol", "1e-4", "--primes", "2"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["tol"] == "0.0001"
