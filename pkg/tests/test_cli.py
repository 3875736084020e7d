"""Command-line runner: schema validation, exit codes, outputs and determinism."""

import csv
import json
import time
from pathlib import Path

import numpy as np
import pytest

from iongate import __version__, cli
from iongate.errors import ConvergenceError

BUNDLED = [c["name"] for c in cli.bundled_configs()]


def _write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return path


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _comb_config(**extra):
    params = {"mode_frequencies_mhz": [2.1, 3.6], "eo_offset_mhz": 1.5}
    params.update(extra)
    return {"schema_version": "1.0", "experiment": "comb_spectrum", "parameters": params}


class TestList:
    def test_catalog(self):
        catalog = cli.bundled_configs()
        assert len(catalog) >= 6
        assert {c["experiment"] for c in catalog} == set(cli.EXPERIMENTS)
        for c in catalog:
            assert Path(c["file"]).is_file()
            assert c["description"]
        assert [c["name"] for c in catalog] == sorted(c["name"] for c in catalog)

    def test_text(self, capsys):
        assert cli.main(["list"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert len(out) == len(BUNDLED)
        assert out[0].startswith(BUNDLED[0])

    def test_json(self, capsys):
        assert cli.main(["list", "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert [c["name"] for c in data] == BUNDLED

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out


class TestSchema:
    def test_bundled_configs_validate(self):
        for name in BUNDLED:
            cli.validate_config(json.loads(cli.resolve_config_path(name).read_text()))

    def test_schema_is_versioned(self):
        assert cli.load_schema()["version"] == "1.0.0"

    def test_empty_config(self, tmp_path, capsys):
        assert cli.main(["run", str(_write(tmp_path, {})), "--out", str(tmp_path / "o")]) == 2
        err = capsys.readouterr().err
        for key in ("schema_version", "experiment", "parameters"):
            assert key in err

    def test_unknown_key(self, tmp_path):
        cfg = _comb_config(colour="blue")
        assert cli.main(["run", str(_write(tmp_path, cfg)), "--out", str(tmp_path / "o")]) == 2

    def test_unknown_top_level_key(self, tmp_path):
        cfg = _comb_config()
        cfg["extra"] = 1
        assert cli.main(["run", str(_write(tmp_path, cfg)), "--out", str(tmp_path / "o")]) == 2

    def test_invalid_json(self, tmp_path):
        assert cli.main(["run", str(_write(tmp_path, "{not json")), "--out", str(tmp_path / "o")]) == 2

    def test_missing_file(self, tmp_path):
        assert cli.main(["run", str(tmp_path / "nope.json")]) == 2

    def test_wrong_block_for_experiment(self, tmp_path):
        cfg = {"schema_version": "1.0", "experiment": "trajectory",
               "parameters": {"mode_frequencies_mhz": [1, 2], "eo_offset_mhz": 1}}
        assert cli.main(["run", str(_write(tmp_path, cfg)), "--out", str(tmp_path / "o")]) == 2


class TestExitCodes:
    def test_precondition(self, tmp_path, capsys):
        cfg = {"schema_version": "1.0", "experiment": "gate_truth_table",
               "parameters": {"scheme": "sigma_z", "n_max": 4,
                              "trap": {"com_frequency_mhz": 2.1, "eta_2": 0.1, "spacing_offset_periods": 0.25}}}
        assert cli.main(["run", str(_write(tmp_path, cfg)), "--out", str(tmp_path / "o")]) == 3
        assert "precondition" in capsys.readouterr().err

    def test_bad_scaling_grid(self, tmp_path):
        cfg = {"schema_version": "1.0", "experiment": "fast_scaling",
               "parameters": {"cycles": [1], "grid": {"start": 0.1, "stop": 2.0, "points": 3}, "trials": 10}}
        assert cli.main(["run", str(_write(tmp_path, cfg)), "--out", str(tmp_path / "o")]) == 3

    def test_convergence(self, tmp_path, monkeypatch):
        def fail(*args):
            raise ConvergenceError("did not converge")
        monkeypatch.setitem(cli.RUNNERS, "comb_spectrum", fail)
        assert cli.main(["run", str(_write(tmp_path, _comb_config())), "--out", str(tmp_path / "o")]) == 4


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_config_runs(name, tmp_path):
    start = time.perf_counter()
    out = cli.run(name, tmp_path / name)
    assert time.perf_counter() - start < 300
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["version"] == __version__
    assert {"resolved", "truncation", "seed", "parameters", "timestamp"} <= set(manifest)
    for f in manifest["outputs"]:
        assert (out / f).is_file()
    assert "summary.json" in manifest["outputs"] or "spectrum.csv" in manifest["outputs"]


class TestOutputs:
    def test_sigma_z_rows(self, tmp_path):
        out = cli.run("sigma_z_truthtable", tmp_path)
        rows = _rows(out / "fidelities.csv")
        assert [r["input"] for r in rows] == ["uu", "ud", "du", "dd"]
        assert all(float(r["fidelity"]) >= 0.999 for r in rows)
        assert all(float(r["purity"]) >= 0.999 for r in rows)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["truncation"]

    def test_comb_lines(self, tmp_path):
        out = cli.run("comb_spectrum", tmp_path)
        lines = {r["label"]: float(r["frequency_MHz"]) for r in _rows(out / "spectrum.csv")}
        assert lines == {"C+": 1.5, "C-": -1.5, "B1+": -0.6, "B1-": 0.6, "R1+": 3.6, "R1-": -3.6,
                         "B2+": -2.1, "B2-": 2.1, "R2+": 5.1, "R2-": -5.1}
        rates = _rows(out / "rates.csv")
        assert float(rates[0]["rate"]) == 1.0          # θ = 0, k = 0

    def test_trajectory_summary(self, tmp_path):
        out = cli.run("trajectory", tmp_path)
        s = json.loads((out / "summary.json").read_text())
        assert s["closed"] is True
        assert s["shoelace_phase"] == pytest.approx(s["analytic_phase"], rel=1e-6)
        assert s["numeric_phase"] == pytest.approx(s["analytic_phase"], abs=1e-5)

    def test_clock_states(self, tmp_path):
        out = cli.run("clock_states", tmp_path)
        pairs = _rows(out / "pairs.csv")
        clock = [p for p in pairs if p["level_1"] == "F=0,mF=+0" and p["level_2"] == "F=1,mF=+0"]
        assert float(clock[0]["B_T"]) == 0.0
        stark = _rows(out / "stark.csv")
        r = np.array([float(s["detuning_over_splitting"]) for s in stark])
        d = np.array([float(s["differential_ratio"]) for s in stark])
        assert np.polyfit(np.log(r), np.log(d), 1)[0] == pytest.approx(-1.0, abs=0.05)

    def test_prefix_and_directory(self, tmp_path):
        cfg = _comb_config()
        cfg["output"] = {"directory": str(tmp_path / "custom"), "prefix": "run1"}
        out = cli.run(_write(tmp_path, cfg))
        assert out == tmp_path / "custom"
        assert (out / "run1_spectrum.csv").is_file() and (out / "run1_manifest.json").is_file()


class TestDeterminism:
    def test_same_seed_same_bytes(self, tmp_path):
        a = cli.run("phase_sweep_sensitive", tmp_path / "a")
        b = cli.run("phase_sweep_sensitive", tmp_path / "b", workers=3)
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()

    def test_seed_override(self, tmp_path):
        a = cli.run("phase_sweep_sensitive", tmp_path / "a")
        b = cli.run("phase_sweep_sensitive", tmp_path / "b", seed=99)
        assert (a / "sweep.csv").read_bytes() != (b / "sweep.csv").read_bytes()
        assert json.loads((b / "manifest.json").read_text())["seed"] == 99

    def test_scaling_bytes(self, tmp_path):
        cfg = {"schema_version": "1.0", "experiment": "fast_scaling", "seed": 3,
               "parameters": {"cycles": [1], "grid": {"start": 0.01, "stop": 0.1, "points": 3}, "trials": 500,
                              "bootstrap": 20}}
        path = _write(tmp_path, cfg)
        a, b = cli.run(path, tmp_path / "a"), cli.run(path, tmp_path / "b")
        assert (a / "scaling.csv").read_bytes() == (b / "scaling.csv").read_bytes()


def test_trap_units():
    trap = cli.trap_from_params({"com_frequency_mhz": 2.0, "eta_2": 0.1})
    assert trap.omega_1 == pytest.approx(2 * np.pi * 2.0e6)
    assert trap.eta(2) == pytest.approx(0.1)
