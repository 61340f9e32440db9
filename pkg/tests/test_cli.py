import json

import pytest

from confspace.cli import locate_paths, line_of, main
from confspace.suites import SUITES

SMALL = {
    "schema": "confspace-experiment/1",
    "suite": "poisson_identity",
    "seed": 11,
    "space": {"kind": "real", "dim": 1},
    "measure": {"kind": "lebesgue", "parameters": {"dim": 1}},
    "windows": [{"kind": "box", "lower": [0.0], "upper": [4.0]}],
    "samples": 3000,
    "params": {
        "regions": [{"kind": "box", "lower": [0.0], "upper": [1.0]},
                    {"kind": "box", "lower": [2.0], "upper": [3.0]}],
        "superpose_intensity": 1.0,
    },
}


def write(tmp_path, doc, name="exp.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2) if not isinstance(doc, str) else doc)
    return p


def outputs(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_run_is_deterministic(tmp_path, capsys):
    spec = write(tmp_path, SMALL)
    assert main(["run", str(spec), "--out", str(tmp_path / "a")]) == 0
    assert main(["run", str(spec), "--out", str(tmp_path / "b")]) == 0
    a, b = outputs(tmp_path / "a"), outputs(tmp_path / "b")
    assert a == b
    assert {"report.json", "joint_events.csv", "count_histograms.csv"} <= set(a)
    report = json.loads(a["report.json"])
    assert report["passed"] and report["seed"] == 11


def test_shards_and_seed_override(tmp_path, capsys):
    spec = write(tmp_path, SMALL)
    for d in ("s1", "s2"):
        assert main(["run", str(spec), "--out", str(tmp_path / d), "--shards", "3"]) == 0
    assert outputs(tmp_path / "s1") == outputs(tmp_path / "s2")
    main(["run", str(spec), "--out", str(tmp_path / "o"), "--seed-override", "12"])
    assert json.loads((tmp_path / "o" / "report.json").read_text())["seed"] == 12
    assert main(["run", str(spec), "--out", str(tmp_path / "x"), "--shards", "0"]) == 2


def test_failing_check_exits_one(tmp_path, capsys):
    doc = dict(SMALL, suite="kakutani", params={"cutoff": 8, "sequences": ["gauss-shift-k^-0.5"]})
    spec = write(tmp_path, doc)
    code = main(["run", str(spec), "--out", str(tmp_path / "k")])
    err = capsys.readouterr().err
    assert code == 1 and "failed check" in err


def test_schema_errors_name_the_line(tmp_path, capsys):
    doc = dict(SMALL)
    del doc["seed"]
    doc["params"] = dict(SMALL["params"], superpose_intensity=-1)
    spec = write(tmp_path, doc)
    assert main(["run", str(spec), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "seed: Field required" in err
    assert "params.superpose_intensity" in err
    text = spec.read_text().splitlines()
    ln = int([e for e in err.splitlines() if "superpose_intensity" in e][0].split(":")[1])
    assert "superpose_intensity" in text[ln - 1]


def test_invalid_json(tmp_path, capsys):
    spec = write(tmp_path, '{\n  "suite": "metrics",\n  "seed": 1,\n}\n')
    assert main(["run", str(spec), "--out", str(tmp_path / "o")]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_unknown_transformation_kind(tmp_path, capsys):
    doc = dict(SMALL, suite="spherical", params={},
               transformations=[{"name": "t", "ast": {"kind": "teleport", "params": {}}}])
    spec = write(tmp_path, doc)
    assert main(["run", str(spec), "--out", str(tmp_path / "o")]) == 2
    assert "transformations.0.ast" in capsys.readouterr().err


def test_list_suites(capsys):
    assert main(["list-suites"]) == 0
    out = capsys.readouterr().out
    assert sum(line.split(":")[0] in SUITES for line in out.splitlines()
               if not line.startswith(" ")) == 6
    assert main(["list-suites", "spherica"]) == 2
    assert "did you mean 'spherical'" in capsys.readouterr().err
    assert main(["list-suites", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc["suites"]) == set(SUITES)
    assert "experiment" in doc


def test_help_exits_cleanly():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_locate_paths():
    text = '{\n  "a": [1,\n    {"b": 2}],\n  "c": 3\n}'
    offs = locate_paths(text)
    assert line_of(text, offs, ("a", 1, "b")) == 3
    assert line_of(text, offs, ("c",)) == 4
    assert line_of(text, offs, ("c", "missing")) == 4
