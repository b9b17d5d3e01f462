import json

import pytest

from artifact import cli


def _run(tmp_path, experiment, config, name="out", extra=()):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / name
    code = cli.main([experiment, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


SMALL = {
    "recurrence-sweep": {"map": "f5", "N": {"from": 16, "to": 48, "stride": 16}},
    "orbit-measure": {"map": "f1", "N": 64, "x": [0.3, 0.6], "resolution": 16},
    "measure-raster": {"map": "h1", "N": 1025, "x": [0.5, 0.5], "resolution": 32},
    "global-measure": {"map": "expanding", "N": 512, "resolution": 32},
    "rotation-observable": {"map": "g1", "K": 8, "T": 50, "seed": 2},
    "rotation-discretized": {"map": "g1", "N": 24},
    "rotation-asymptotic": {"map": "g1", "N": {"from": 10, "to": 14}},
    "linear-rate": {"random": {"kind": "rotation", "k": 4, "count": 2}, "R": 20, "seed": 1},
    "linear-geometry": {"matrix": [[0.8, 0.3], [0, 1.25]], "samples": 40, "R": 30, "V": 3},
    "roundoff": {"sequence": [1.31, 1.77], "R": 500, "bins": 5},
    "minkowski": {"lattice": [[3, 0], [0, 1]], "S": {"stripe": 3}, "exact": True},
    "hajos": {"matrix": [[1, 0.5], [0, 1]]},
    "lax": {"map": "f3", "N": 12},
    "transfer-converge": {"map": "expanding", "N": [256], "M": 512, "m": 3, "kmax": 4},
    "localglobal": {"map": "f5", "N": 128, "samples": 4, "R": 20},
}


@pytest.mark.parametrize("experiment", sorted(SMALL))
def test_every_experiment_runs_and_is_reproducible(tmp_path, experiment):
    code, out = _run(tmp_path, experiment, SMALL[experiment], "a")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == experiment
    assert manifest["config_sha256"] == cli.config_hash(SMALL[experiment])
    assert "numpy" in manifest["versions"]
    code, out2 = _run(tmp_path, experiment, SMALL[experiment], "b")
    assert code == 0
    for f in manifest["outputs"]:
        assert (out / f).read_bytes() == (out2 / f).read_bytes(), f


def test_run_takes_experiment_from_config(tmp_path):
    code, out = _run(tmp_path, "run", {"experiment": "hajos", "matrix": [[1, 0], [0, 1]]})
    assert code == 0
    assert json.loads((out / "hajos.json").read_text())["found"]


def test_recurrence_csv_columns(tmp_path):
    code, out = _run(tmp_path, "recurrence-sweep", SMALL["recurrence-sweep"])
    lines = (out / "recurrence.csv").read_text().splitlines()
    assert lines[0] == ("N,q_N,recurrent_count,n_cycles,max_cycle_len,"
                        "degree_of_recurrence,stabilization_time")
    assert [ln.split(",")[0] for ln in lines[1:]] == ["16", "32", "48"]


@pytest.mark.parametrize("config", [
    {"map": "f5"},                                      # missing N
    {"map": "no-such-map", "N": 8},                     # unknown preset
    {"map": "f5", "N": 8, "colour": "red"},             # unknown key
    {"map": "f5", "N": {"from": 20, "to": 10}},         # empty range
])
def test_schema_violations_exit_2(tmp_path, config, capsys):
    code, out = _run(tmp_path, "recurrence-sweep", config)
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["kind"] == "config" and err["exit_code"] == 2
    assert json.loads((out / "error.json").read_text()) == err


def test_seed_is_mandatory_for_stochastic(tmp_path):
    code, _ = _run(tmp_path, "rotation-observable", {"map": "g1", "K": 2, "T": 2})
    assert code == 2


def test_dry_run_does_not_compute(tmp_path, capsys):
    code, out = _run(tmp_path, "lax", {"map": "f3", "N": 10}, extra=("--dry-run",))
    assert code == 0 and not out.exists()
    assert json.loads(capsys.readouterr().out)["valid"] is True


def test_budget_exit_3(tmp_path):
    code, out = _run(tmp_path, "recurrence-sweep", {"map": "f5", "N": 64, "budget": 100})
    assert code == 3
    assert json.loads((out / "error.json").read_text())["kind"] == "budget"


def test_numeric_failure_exit_4(tmp_path):
    code, out = _run(tmp_path, "lax", {"map": "f1", "N": 8})
    assert code == 4


def test_wrong_map_kind_exit_2(tmp_path):
    code, _ = _run(tmp_path, "transfer-converge", {"map": "f5", "N": [64]})
    assert code == 2


def test_threads_flag(tmp_path):
    code, _ = _run(tmp_path, "hajos", {"matrix": [[1, 0], [0, 1]]}, extra=("--threads", "1"))
    assert code == 0
