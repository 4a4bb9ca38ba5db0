import csv
import json

import pytest

from superrec import cli

DIAG_2I_2 = {"schema": 1, "operators": [{"id": "rot", "operator": {"kind": "diagonal", "entries": [[0, 2], 2]}}],
           "params": {"epsilon": 1e-9}, "seed": 0}


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def read_jsonl(path):
    lines = path.read_text().splitlines()
    head = json.loads(lines[0])
    return head, [json.loads(l) for l in lines[1:]]


def test_classify(tmp_path, capsys):
    cfg = write(tmp_path, DIAG_2I_2)
    assert cli.run(["classify", cfg, "--output-dir", str(tmp_path)]) == 0
    head, body = read_jsonl(tmp_path / "classify.jsonl")
    assert head["header"] and head["schema"] == 1 and "timestamp" in head
    assert body[0]["final"] == "super_recurrent"
    rows = list(csv.DictReader((tmp_path / "classify.csv").open()))
    assert rows[0]["final"] == "super_recurrent"
    assert '"final": "super_recurrent"' in capsys.readouterr().out


def test_spectrum_and_detect(tmp_path):
    cfg = dict(DIAG_2I_2, vectors=[[1, 1]])
    path = write(tmp_path, cfg)
    assert cli.run(["spectrum", path, "--output-dir", str(tmp_path), "-q"]) == 0
    _, body = read_jsonl(tmp_path / "spectrum.jsonl")
    assert body[0]["report"]["circle_radius"] == 2
    assert cli.run(["detect", path, "--output-dir", str(tmp_path), "-q"]) == 0
    _, body = read_jsonl(tmp_path / "detect.jsonl")
    cert = body[0]["super_recurrence"]["certificates"][0]
    assert body[0]["super_recurrence"]["status"] == "certified" and cert["n"] == 4
    assert body[0]["recurrence"]["status"] == "inconclusive"


def test_returns(tmp_path):
    assert cli.run(["returns", "--thetas", "0.333333333", "--delta", "0.01", "--output-dir", str(tmp_path), "-q"]) == 0
    _, body = read_jsonl(tmp_path / "returns.jsonl")
    assert body[0]["n"] == 3 and body[0]["valid"]
    assert cli.run(["returns", "--thetas", "0.333333333,0.25", "--delta", "0.01", "--method", "lll",
                    "--output-dir", str(tmp_path), "-q"]) == 0
    _, body = read_jsonl(tmp_path / "returns.jsonl")
    assert body[0]["method"] == "lll" and body[0]["valid"]


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "envout"))
    assert cli.run(["returns", "--thetas", "0.5", "--delta", "0.1", "-q", "--format", "csv"]) == 0
    assert (tmp_path / "envout" / "returns.csv").exists()
    assert not (tmp_path / "envout" / "returns.jsonl").exists()


@pytest.mark.parametrize("cfg, match", [
    ('{"schema": 1, "operators": [', "line 1"),
    ({"operators": []}, "schema"),
    ({"schema": 1, "operators": [{"kind": "dense", "matrix": [[1, 2]]}]}, r"operators\[0\]\.matrix"),
    ({"schema": 1, "operators": [{"kind": "diagonal", "entries": [1]}], "bogus": 1}, "unknown"),
    ({"schema": 1, "operators": [{"kind": "diagonal", "entries": [1]}], "vectors": [[1, 2]]}, "vectors"),
    ({"schema": 1, "operators": [{"kind": "diagonal", "entries": [1]}], "params": {"epsilon": 3}}, "epsilon"),
])
def test_input_errors(tmp_path, capsys, cfg, match):
    assert cli.run(["spectrum", write(tmp_path, cfg), "--output-dir", str(tmp_path)]) == 1
    assert pytest.importorskip("re").search(match, capsys.readouterr().err)


def test_missing_file(tmp_path):
    assert cli.run(["spectrum", str(tmp_path / "nope.json")]) == 1


def test_bad_arguments():
    assert cli.run(["frobnicate"]) == 1
    assert cli.run(["returns", "--thetas", "x", "--delta", "0.1"]) == 1
    assert cli.run(["returns", "--thetas", "0.1", "--delta", "0.9"]) == 1


def test_budget_exhausted_is_nonconvergence(tmp_path, capsys):
    code = cli.run(["returns", "--thetas", "0.1234567", "--delta", "0.0001", "--n-max", "5",
                    "--output-dir", str(tmp_path)])
    assert code == 2 and "non-convergence" in capsys.readouterr().err


def test_suite_small_deterministic(tmp_path):
    args = ["suite", "--seed", "3", "--dims", "3", "--cases", "1", "-q"]
    assert cli.run(args + ["--output-dir", str(tmp_path / "a")]) == 0
    assert cli.run(args + ["--output-dir", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "suite.jsonl").read_text().splitlines()
    b = (tmp_path / "b" / "suite.jsonl").read_text().splitlines()
    assert a[1:] == b[1:]
    assert json.loads(a[-1])["all_pass"]
