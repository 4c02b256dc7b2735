import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from macrocap import cli
from macrocap.capacity_approx import approx_capacity
from macrocap.channel import noise_power, scenario_table1
from macrocap.errors import ConfigError, DegeneracyError


def _write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _small(**over):
    cfg = {
        "scenario": {"preset": "S3", "rho_db": [0, 10]},
        "engines": ["exact", "approx", "bound", "lowsnr", "highsnr", "mc"],
        "mc_trials": 2000,
        "seed": 4,
    }
    cfg.update(over)
    return cfg


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_csv_and_manifest(tmp_path):
    out = str(tmp_path / "r.csv")
    assert cli.main(["run", "--config", _write(tmp_path, _small()), "--out", out]) == 0
    rows = _rows(out)
    assert tuple(rows[0]) == cli.COLUMNS
    assert [r[0] for r in rows[1:]] == ["0", "10"]
    assert all(c != "" for c in rows[1])
    man = json.loads(open(out + ".manifest.json").read())
    assert man["config_hash"] == cli.config_hash(_small())
    assert man["seed"] == 4 and man["mc_trials"] == 2000
    assert len(man["points"]) == 2
    assert {"macrocap", "python", "numpy"} <= set(man["versions"])
    assert np.array(man["power_matrix"]).shape == (3, 2)


def test_values_match_library(tmp_path):
    out = str(tmp_path / "r.csv")
    cli.main(["run", "--config", _write(tmp_path, _small(engines=["approx"])), "--out", out])
    row = _rows(out)[2]
    P, _ = scenario_table1("S3", 10.0)
    ref = approx_capacity(P, noise_power(P, 10.0))
    assert float(row[2]) == pytest.approx(ref, rel=1e-8)
    assert row[1] == "" and row[6] == "" and row[7] == ""


def test_rows_in_snr_order_and_range_syntax(tmp_path):
    cfg = _small(engines=["bound"])
    cfg["scenario"]["rho_db"] = {"start": -5, "stop": 25, "step": 2.5}
    out = str(tmp_path / "r.csv")
    cli.main(["run", "--config", _write(tmp_path, cfg), "--out", out])
    rhos = [float(r[0]) for r in _rows(out)[1:]]
    assert rhos == [-5 + 2.5 * i for i in range(13)]


def test_byte_identical_reruns_and_worker_counts(tmp_path, monkeypatch):
    cfg = _write(tmp_path, _small(engines=["approx", "mc"]))
    texts = []
    for threads in ("1", "8", "8"):
        monkeypatch.setenv("MACROCAP_THREADS", threads)
        out = str(tmp_path / f"r{len(texts)}.csv")
        cli.main(["run", "--config", cfg, "--out", out])
        texts.append(open(out, "rb").read())
    assert texts[0] == texts[1] == texts[2]


def test_output_field_used(tmp_path):
    out = str(tmp_path / "from_cfg.csv")
    assert cli.main(["run", "--config", _write(tmp_path, _small(engines=["bound"], output=out))]) == 0
    assert _rows(out)[0][0] == "rho_db"


def test_missing_output_is_config_error(tmp_path):
    assert cli.main(["run", "--config", _write(tmp_path, _small())]) == 1


def test_validate_ok(tmp_path, capsys):
    assert cli.main(["validate", "--config", _write(tmp_path, _small())]) == 0
    assert capsys.readouterr().out.strip() == "ok"


def test_validate_lists_every_error_with_path(tmp_path, capsys):
    bad = {
        "scenario": {"kind": "explicit", "powers": [[1, 2], [3, -1]], "rho_db": "x"},
        "engines": ["exact", "warp"],
        "mc_trials": 1,
        "colour": "blue",
    }
    assert cli.main(["validate", "--config", _write(tmp_path, bad)]) == 1
    err = capsys.readouterr().err
    for path in ("scenario.rho_db", "scenario.powers[1][1]", "engines[1]", "mc_trials", "colour"):
        assert path in err


def test_invalid_json_and_missing_file(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert cli.main(["validate", "--config", str(p)]) == 1
    assert cli.main(["validate", "--config", str(tmp_path / "nope.json")]) == 1


def test_engine_shape_rules():
    errs = cli.validate({"scenario": {"kind": "explicit", "powers": [[1, 1, 1]] * 3, "rho_db": 0},
                         "engines": ["exact"]})
    assert any("exact engine requires N=2" in e for e in errs)
    errs = cli.validate({"scenario": {"kind": "explicit", "powers": [[1, 1]] * 2, "rho_db": 0},
                         "engines": ["exact"]})
    assert any("n_R>=3" in e for e in errs)
    errs = cli.validate({"scenario": {"kind": "explicit", "powers": [[1, 1, 1]] * 2, "rho_db": 0},
                         "engines": ["approx"]})
    assert any("approx engine" in e for e in errs)


def test_scenario_kinds_parse():
    cfgs = [
        {"kind": "explicit", "powers": [[1, 0.5], [0.2, 1], [0.1, 0.3]], "rho_db": 5},
        {"kind": "exponential", "alphas": [0.5, 2.0], "traces": [1.0, 0.5], "n_r": 3, "rho_db": [0, 5]},
        {"kind": "table", "table_id": "s4", "rho_db": 0},
        {"kind": "random-drop", "n_bs": 3, "n_users": 2, "seed": 3, "rho_db": 0},
    ]
    for sc in cfgs:
        cfg = cli.parse_config({"scenario": sc, "engines": ["approx", "bound"]})
        assert np.asarray(cfg.power_matrix()).shape[1] == 2


def test_drop_seed_defaults_to_run_seed():
    a = cli.parse_config({"scenario": {"kind": "random-drop", "rho_db": 0}, "engines": ["bound"], "seed": 9})
    b = cli.parse_config({"scenario": {"kind": "random-drop", "seed": 9, "rho_db": 0}, "engines": ["bound"]})
    np.testing.assert_array_equal(np.asarray(a.power_matrix()), np.asarray(b.power_matrix()))


def test_config_error_type():
    with pytest.raises(ConfigError) as info:
        cli.parse_config([])
    assert info.value.errors


def test_engine_failure_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise DegeneracyError("forced")

    monkeypatch.setattr(cli, "approx_capacity", boom)
    out = str(tmp_path / "r.csv")
    assert cli.main(["run", "--config", _write(tmp_path, _small(engines=["approx", "bound"])), "--out", out]) == 2
    rows = _rows(out)
    assert rows[1][2] == "nan" and math.isfinite(float(rows[1][3]))
    man = json.loads(open(out + ".manifest.json").read())
    assert "DegeneracyError" in man["points"][0]["errors"]["approx"]


def test_preset_list_and_show(capsys):
    assert cli.main(["preset", "--list"]) == 0
    names = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
    assert names[:8] == [f"S{i}" for i in range(1, 9)]
    assert "drop-3x3" in names
    assert cli.main(["preset", "--show", "S5"]) == 0
    assert cli.validate(json.loads(capsys.readouterr().out)) == []
    assert cli.main(["preset", "--show", "nope"]) == 1


@pytest.mark.parametrize("name", list(cli.PRESETS))
def test_presets_are_valid(name):
    assert cli.validate(cli.PRESETS[name]) == []


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "macrocap.cli", "preset", "--list"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and "S1" in r.stdout
