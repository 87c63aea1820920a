import json
import math

import numpy as np
import pytest

from causalpol import cli

TM = '{"family": "terno_moretti"}'
K32 = '{"family": "causal", "parameters": {"kind": "power", "r": 1.5}}'


def run(args, tmp_path):
    return cli.main(args + ["--out-dir", str(tmp_path)])


def records(tmp_path):
    return [json.loads(line) for line in (tmp_path / "runs.jsonl").read_text().splitlines()]


def test_eval_writes_csv_and_record(tmp_path):
    pts = tmp_path / "pts.txt"
    pts.write_text("# k p\n0 0 0 0 0 1.7320508075688772\n1,2,3,-1,0,2\n")
    assert run(["eval", "--kernel", K32, "--points", str(pts)], tmp_path) == 0
    rows = (tmp_path / "eval.csv").read_text().splitlines()
    assert rows[0] == "k1,k2,k3,p1,p2,p3,K,tolerance"
    assert float(rows[1].split(",")[6]) == pytest.approx(1 / math.sqrt(3), abs=1e-15)
    rec = records(tmp_path)[0]
    assert rec["command"] == "eval" and rec["pass"] and rec["version"] == "0.1.0"
    assert len(rec["config_hash"]) == 16


@pytest.mark.parametrize("args", [
    ["eval", "--kernel", '{"family": "bogus"}', "--points", "x.txt"],
    ["eval", "--kernel", "{not json", "--points", "x.txt"],
    ["eval", "--kernel", TM, "--points", "missing.txt"],
    ["invert", "--profile", '{"kind": "supplementary", "lambda": 0.5}'],
    ["pd-test", "--kernel", TM, "--n", "0"],
    ["report", "missing.jsonl"],
])
def test_usage_errors_exit_2(args, tmp_path, capsys):
    assert run(args, tmp_path) == 2
    assert "error:" in capsys.readouterr().err


def test_bad_points_file(tmp_path):
    pts = tmp_path / "pts.txt"
    pts.write_text("1 2 3\n")
    assert run(["eval", "--kernel", TM, "--points", str(pts)], tmp_path) == 2


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kernel": {"family": "causal", "parameters": {"kind": "power", "r": 0.5}},
                               "sets": 3, "expect": "pd"}))
    # config expects pd, K_0.5 is not: assertion failure
    assert run(["pd-test", "--config", str(cfg)], tmp_path) == 1
    assert run(["pd-test", "--config", str(cfg), "--expect", "violated"], tmp_path) == 0
    recs = records(tmp_path)
    assert [r["pass"] for r in recs] == [False, True]
    assert recs[0]["config_hash"] != recs[1]["config_hash"]
    with pytest.raises(SystemExit):
        cli.main(["pd-test", "--expect", "maybe"])


def test_malformed_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2]")
    assert run(["invert", "--config", str(cfg)], tmp_path) == 2
    assert run(["invert", "--config", str(tmp_path / "none.json")], tmp_path) == 2


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["nc-check", "--profile", '{"kind": "power", "r": 1.5}', "--expect", "holds"]) == 0
    assert (tmp_path / "envout" / "nc.csv").exists()
    assert (tmp_path / "envout" / "runs.jsonl").exists()


def test_data_commands(tmp_path):
    assert run(["invert", "--profile", '{"kind": "power", "r": 1}'], tmp_path) == 0
    assert run(["expand", "--kernel", TM, "--J", "2", "--grid", "1", "2"], tmp_path) == 0
    assert run(["maximality", "--kernel", K32, "--n", "200", "--no-strict"], tmp_path) == 0
    assert run(["localize", "--kernel", TM, "--radii", "1", "2"], tmp_path) == 0
    assert run(["ct-check", "--kernel", K32, "--times", "1"], tmp_path) == 0
    assert run(["onedim", "--varsigma", "2"], tmp_path) == 0
    loc = (tmp_path / "localize.csv").read_text().splitlines()
    assert loc[0] == "radius,probability,error,method" and len(loc) == 3
    assert (tmp_path / "onedim_f.csv").exists()
    assert [r["command"] for r in records(tmp_path)] == ["invert", "expand", "maximality", "localize",
                                                         "ct-check", "onedim"]


def test_suite_deterministic_payload(tmp_path):
    log1, log2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert cli.main(["suite", "nc", "--seed", "3", "--out-dir", str(tmp_path), "--log", str(log1)]) == 0
    assert cli.main(["suite", "nc", "--seed", "3", "--out-dir", str(tmp_path), "--log", str(log2)]) == 0
    a, b = (json.loads(p.read_text()) for p in (log1, log2))
    assert json.dumps(a["payload"], sort_keys=True) == json.dumps(b["payload"], sort_keys=True)
    assert a["config_hash"] == b["config_hash"] and a["seed"] == 3


def test_report(tmp_path, capsys):
    log = tmp_path / "runs.jsonl"
    good = {"command": "x", "pass": True, "elapsed_s": 0.1,
            "assertions": [{"name": "ok", "value": 1, "op": "<=", "bound": 2, "margin": 1, "pass": True}]}
    bad = {"command": "y", "pass": False, "elapsed_s": 0.2,
           "assertions": [{"name": "broken", "value": 3, "op": "<=", "bound": 2, "margin": -1, "pass": False}]}
    log.write_text(json.dumps(good) + "\n{truncated\n" + json.dumps(bad) + "\n")
    assert cli.main(["report", str(log), "--out-dir", str(tmp_path)]) == 1
    out = capsys.readouterr()
    assert "1 corrupted lines skipped" in out.out and "warning" in out.err
    rows = (tmp_path / "report.csv").read_text().splitlines()
    assert rows[1].startswith("y,broken,FAIL")
    assert (tmp_path / "report.txt").exists()
    empty = tmp_path / "empty.jsonl"
    empty.write_text("garbage\n")
    assert cli.main(["report", str(empty), "--out-dir", str(tmp_path)]) == 2


def test_clean_handles_numpy_and_nonfinite():
    out = cli.clean({"a": np.float64(1.5), "b": np.array([1, 2]), "c": float("nan"), "d": np.bool_(True),
                     "e": (np.int64(3), -np.inf)})
    assert out == {"a": 1.5, "b": [1, 2], "c": "nan", "d": True, "e": [3, "-inf"]}
    assert cli.config_hash({"b": 1, "a": 2}) == cli.config_hash({"a": 2, "b": 1})
