import json

import pytest

from heatpath import cli, tables
from heatpath.errors import ConfigError


def run(tmp_path, *args):
    return cli.main([*args, "--out", str(tmp_path)])


def test_table_round_trip(tmp_path):
    rows = [(1, 0.1, True, "a"), (2, 1 / 3, False, "b")]
    for f in ("csv", "json"):
        p = tables.write_table(tmp_path / "t", ["i", "x", "ok", "s"], rows, {"k": 0.5}, f)
        meta, cols, back = tables.read_table(p)
        assert cols == ["i", "x", "ok", "s"]
        assert back[1][1] == 1 / 3 and back[0][2] is True
        assert meta["k"] == 0.5


def test_unsupported_schema_rejected(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("# schema_version=99\na\n1\n")
    with pytest.raises(ConfigError):
        tables.read_table(p)


def test_simulate_writes_paths_and_manifest(tmp_path):
    assert run(tmp_path, "simulate", "--resolution", "5", "--replicates", "3") == 0
    paths = sorted(tmp_path.glob("path_*.csv"))
    assert len(paths) == 3
    meta, cols, rows = tables.read_table(paths[1])
    assert meta["replicate_index"] == 1 and len(rows) == 33
    man = json.loads((tmp_path / "manifest_simulate.json").read_text())
    assert man["config"]["resolution_j"] == 5
    assert set(man["outputs"]) == {p.name for p in paths}
    assert "timestamps" not in man


def test_thread_count_does_not_change_output(tmp_path, monkeypatch):
    monkeypatch.setenv("HEATPATH_THREADS", "1")
    run(tmp_path / "a", "simulate", "--resolution", "6", "--replicates", "40")
    monkeypatch.setenv("HEATPATH_THREADS", "4")
    run(tmp_path / "b", "simulate", "--resolution", "6", "--replicates", "40")
    for p in (tmp_path / "a").glob("path_*.csv"):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"resolution_j": 4, "seeds": {"base": 9, "count": 2}}))
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(cfg), "--replicates", "1", "--out", str(out)]) == 0
    man = json.loads((out / "manifest_simulate.json").read_text())
    assert man["config"]["resolution_j"] == 4
    assert man["config"]["seeds"] == {"base": 9, "count": 1}


def test_manifest_replays_as_config(tmp_path):
    run(tmp_path / "a", "simulate", "--resolution", "4", "--seed", "5")
    man = tmp_path / "a" / "manifest_simulate.json"
    assert cli.main(["simulate", "--config", str(man), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "path_00000.csv").read_bytes() == (tmp_path / "b" / "path_00000.csv").read_bytes()


@pytest.mark.parametrize("args", [
    ["simulate", "--resolution", "14"],
    ["besov", "--section", "spacetime", "--resolution", "3"],
    ["localtime", "--replicates", "10", "--resolution", "6"],
    ["simulate", "--seed", "-1"],
])
def test_config_errors_exit_2(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_unknown_config_key_exit_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"resolution": 4}))
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    cfg.write_text(json.dumps({"analysis": {"localtime": {"bogus": 1}}}))
    assert cli.main(["localtime", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_unwritable_output_exit_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["simulate", "--out", str(blocker / "sub")]) == 2


def test_verify_exit_codes(tmp_path):
    assert run(tmp_path / "ok", "verify", "--only", "f_space") == 0
    assert run(tmp_path / "bad", "verify", "--only", "f_space", "--tolerance-scale", "1e-9") == 1
    meta, cols, rows = tables.read_table(tmp_path / "bad" / "verify_report.csv")
    assert "discrepancy" in cols and len(rows) == 50


def test_timestamps_are_opt_in(tmp_path):
    run(tmp_path, "simulate", "--resolution", "3", "--timestamps")
    man = json.loads((tmp_path / "manifest_simulate.json").read_text())
    assert set(man["timestamps"]) == {"started", "finished"}


def test_lnd_outputs(tmp_path):
    assert run(tmp_path, "lnd", "--resolution", "5") == 0
    doc = json.loads((tmp_path / "lnd_report.json").read_text())
    assert doc["lnd"]["min_ratio"] > 0.05
