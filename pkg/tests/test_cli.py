import csv
import json
import subprocess
import sys

import pytest

from ccmths import cli
from ccmths.runconfig import config_from_tree


def _config(model, **extra):
    tree = {"model": model}
    tree.update(extra)
    return config_from_tree(tree)


def _write(tmp_path, tree, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(tree))
    return path


def _without_timings(report):
    doc = report.to_dict() if isinstance(report, cli.RunReport) else dict(report)
    doc.pop("timings")
    return json.dumps(doc, sort_keys=True, indent=2)


FREE = {"kind": "oscillator", "lambda": 0.0, "D": 20}
QUARTIC = {"kind": "oscillator", "lambda": 0.1, "D": 16}


def test_run_free_oscillator_all_checks():
    report = cli.run(_config(FREE, checks={"oracle": True, "extensivity": True, "random_draws": 3}))
    assert report.energy == 1.0
    assert report.exit_code == 0
    assert all(c["passed"] is not False for c in report.checks.values())
    # every judged check carries the tolerance it was judged against
    for c in report.checks.values():
        assert set(c) == {"value", "tolerance", "passed"}


def test_run_trivial_chain():
    report = cli.run(_config({"kind": "spin_chain", "N": 3, "g": 0.0, "J": 1.5}, checks={"oracle": True}))
    assert report.energy == pytest.approx(-3.0, abs=1e-14)
    assert all(r["ket"] == [0.0, 0.0] and r["bra"] == [0.0, 0.0] for r in report.amplitudes)
    assert report.exit_code == 0


def test_run_interacting_with_checks():
    report = cli.run(_config(QUARTIC, checks={"oracle": True, "extensivity": True}))
    assert report.exit_code == 0, report.checks
    for key in ("dictionary", "left_eigenrow", "energy_vs_exact", "ground_vector_match", "extensivity"):
        assert report.checks[key]["passed"] is True


def test_sweep_endpoint_and_monotone_table():
    report = cli.run_sweep(_config(QUARTIC))
    assert report.exit_code == 0
    rows = report.sweep
    assert [r["n"] for r in rows] == list(range(1, 16))
    assert rows[-1]["scheme"] == "full"
    assert rows[-1]["error"] <= 1e-8


def test_sweep_free_oscillator_zero_errors():
    rows = cli.sweep_sub_n(_config({"kind": "oscillator", "lambda": 0.0, "D": 8}))
    assert all(r["error"] == 0.0 for r in rows)


def test_sweep_d12_endpoint():
    rows = cli.sweep_sub_n(_config({"kind": "oscillator", "lambda": 0.1, "D": 12}))
    assert rows[-1]["error"] <= 1e-8


def test_reports_reproducible():
    config = _config(QUARTIC, checks={"oracle": True, "random_draws": 4}, seed=11)
    assert _without_timings(cli.run(config)) == _without_timings(cli.run(config))
    sweep = _config({"kind": "spin_chain", "N": 3, "g": 0.5})
    assert _without_timings(cli.run_sweep(sweep)) == _without_timings(cli.run_sweep(sweep))


def test_ths_verify_from_report():
    solved = cli.run(_config(QUARTIC))
    report = cli.ths_verify(json.loads(solved.to_json()))
    assert report.exit_code == 0
    assert report.energy == pytest.approx(solved.energy, abs=1e-12)
    assert report.checks["dictionary"]["passed"] is True


def test_ths_verify_rejects_bad_report():
    report = cli.ths_verify({"schema_version": 99, "config": {}})
    assert report.exit_code == 1
    assert report.error["type"] == "SchemaError"


def test_execution_error_exit_code():
    # a tiny iteration budget cannot converge the continuation
    report = cli.run(_config(QUARTIC, solver={"max_iterations": 1}))
    assert report.exit_code == 1
    assert report.error["type"] == "NoConvergence"
    assert report.to_dict()["status"] == "error"


def test_check_failure_exit_code():
    report = cli.RunReport("solve", {}, checks={"x": cli._check(1.0, 1e-3)})
    assert report.exit_code == 2 and report.status == "check_failed"


def test_main_writes_files(tmp_path, capsys):
    cfg = _write(tmp_path, {"model": QUARTIC, "output": {"directory": str(tmp_path / "out")}})
    assert cli.main(["solve", "--config", str(cfg), "--verify", "--seed", "3"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["status"] == "ok"
    doc = json.loads((tmp_path / "out" / "solve.json").read_text())
    assert doc["schema_version"] == 1 and doc["config"]["seed"] == 3
    assert doc["checks"]["energy_vs_exact"]["passed"] is True
    with open(tmp_path / "out" / "amplitudes.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 15
    # no temporary files are left behind
    assert not [p for p in (tmp_path / "out").iterdir() if p.name.startswith(".")]

    assert cli.main(["ths-verify", "--report", str(tmp_path / "out" / "solve.json")]) == 0
    assert (tmp_path / "out" / "ths_verify.json").exists()


def test_main_sweep_and_spectrum(tmp_path):
    cfg = _write(tmp_path, {"model": {"kind": "spin_chain", "N": 3, "g": 0.2}})
    out = tmp_path / "o"
    assert cli.main(["sweep-subn", "--config", str(cfg), "--out", str(out)]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["n"] for r in rows] == ["1", "2", "3"]
    assert cli.main(["spectrum", "--config", str(cfg), "--out", str(out)]) == 0
    spectrum = json.loads((out / "spectrum.json").read_text())["spectra"]["exact"]
    assert len(spectrum) == 8 and spectrum == sorted(spectrum)


def test_main_schema_error(tmp_path, capsys):
    cfg = _write(tmp_path, {"model": FREE, "solver": {"tolerance": -1}})
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "SchemaError"
    assert "solver.tolerance" in err["error"]["message"]


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, {"model": FREE})
    proc = subprocess.run([sys.executable, "-m", "ccmths", "solve", "--config", str(cfg), "--out", str(tmp_path)],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["energy"] == 1.0
