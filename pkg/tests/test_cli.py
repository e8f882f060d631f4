import csv
import json
import subprocess
import sys

import pytest

from latval.cli import main, to_csv
from latval.suites import SUITES, ConfigError, SuiteConfig, dumps, run_suite

SMALL = ["--space", "uniform:64", "--trials", "20"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name", sorted(SUITES))
def test_every_suite_passes_with_defaults(name):
    extra = {"probes-boundedness": {"space": "uniform:2000"}}.get(name, {"space": "uniform:64"})
    cfg = SuiteConfig(suite=name, trials=20, **extra)
    rep = run_suite(cfg)
    assert rep.passed, (name, rep.max_defect, rep.tol)
    obj = json.loads(dumps(rep.to_json()))
    assert set(obj) == {"suite", "config", "pass", "max_defect", "tol", "witnesses", "details",
                        "wall_time"}


def test_suite_is_deterministic():
    a = run_suite(SuiteConfig("valuation-law", space="uniform:64", trials=30, seed=9))
    b = run_suite(SuiteConfig("valuation-law", space="uniform:64", trials=30, seed=9))
    assert a.max_defect == b.max_defect
    assert dumps(a.witnesses) == dumps(b.witnesses)


def test_config_validation():
    with pytest.raises(ConfigError):
        SuiteConfig("nonexistent")
    with pytest.raises(ConfigError):
        SuiteConfig("valuation-law", trials=0)
    with pytest.raises(ConfigError):
        SuiteConfig("valuation-law", tol=-1.0)
    assert SuiteConfig("jordan").tol == 1e-6
    assert SuiteConfig("valuation-law").tol == 1e-10


def test_cli_pass_and_report(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, _ = run(capsys, "verify-suite", "valuation-law", *SMALL, "--out", str(out))
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] is True and rep["config"]["seed"] == 0


def test_cli_failure_exit_code(capsys):
    # a random kernel is not invariant under equal-measure transport
    code, stdout, _ = run(capsys, "verify-suite", "invariance", *SMALL, "--kernel", "random")
    assert code == 1
    assert json.loads(stdout)["pass"] is False


@pytest.mark.parametrize("argv", [
    ["verify-suite", "valuation-law", "--space", "cube:3"],
    ["verify-suite", "valuation-law", "--norm", '{"variant":"lp","p":0.1}'],
    ["verify-suite", "valuation-law", "--kernel", "{not json"],
    ["verify-suite", "valuation-law", "--kernel", "mystery"],
    ["verify-suite", "recovery", "--lambda-grid", "1:2"],
    ["verify-suite", "valuation-law", "--trials", "0"],
    ["decompose", "--space", "uniform:3", "--f", "[1, -1, 0]"],
    ["replay", "/nonexistent/report.json"],
])
def test_cli_input_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_cli_unknown_suite_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify-suite", "no-such-suite"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_cli_internal_error(capsys, monkeypatch):
    import latval.cli as cli

    def boom(cfg):
        raise RuntimeError("boom")
    monkeypatch.setattr(cli, "run_suite", boom)
    code, _, err = run(capsys, "verify-suite", "valuation-law", *SMALL)
    assert code == 3 and "internal error" in err


def test_replay_reproduces(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert run(capsys, "verify-suite", "jordan", *SMALL, "--seed", "4", "--out", str(out))[0] == 0
    code, stdout, _ = run(capsys, "replay", str(out))
    assert code == 0
    rep = json.loads(stdout)
    assert rep["reproduced"] is True
    assert rep["max_defect"] == json.loads(out.read_text())["max_defect"]


def test_replay_flags_tampered_report(capsys, tmp_path):
    out = tmp_path / "r.json"
    run(capsys, "verify-suite", "orthogonality", *SMALL, "--out", str(out))
    obj = json.loads(out.read_text())
    obj["max_defect"] = obj["max_defect"] + 1.0
    out.write_text(json.dumps(obj))
    code, stdout, _ = run(capsys, "replay", str(out))
    assert code == 1 and json.loads(stdout)["reproduced"] is False


def test_probes_via_cli(capsys):
    code, stdout, _ = run(capsys, "probe", "c0-series", "--n", "30")
    assert code == 0
    code, stdout, _ = run(capsys, "probe", "min-functional", "--trials", "50")
    assert code == 0
    code, stdout, _ = run(capsys, "probe", "tent-kernel", "--n-blocks", "8", "--trials", "50")
    assert code == 0
    code, stdout, _ = run(capsys, "probe", "boundedness", "--space", "uniform:2000",
                          "--trials", "3", "--delta", "0.5")
    assert code == 0


def test_decompose_and_recover(capsys):
    code, stdout, _ = run(capsys, "decompose", "--space", "uniform:20", "--seed", "2")
    assert code == 0
    obj = json.loads(stdout)
    assert obj["oracle_gap"] <= obj["oracle_bound"] + 1e-12
    code, stdout, _ = run(capsys, "recover", "--space", "uniform:20", "--kernel", "theta-square",
                          "--lambda-grid=-2:2:9", "--trials", "10")
    assert code == 0
    obj = json.loads(stdout)
    assert obj["roundtrip_defect"] <= 1e-12
    assert obj["theta"]["values"][0] == pytest.approx(4.0, abs=1e-12)


def test_csv_export(capsys, tmp_path):
    path = tmp_path / "r.csv"
    run(capsys, "verify-suite", "valuation-law", *SMALL, "--csv", str(path))
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["key", "value"]
    assert {"suite", "max_defect", "pass"} <= {r[0] for r in rows[1:]}
    table = to_csv({"details": {"table": [{"a": 1, "b": 2}, {"a": 3, "b": 4}]}})
    assert table.splitlines() == ["a,b", "1,2", "3,4"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "latval.cli", "probe", "c0-series"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["suite"] == "probes-c0-series"
