import json

import pytest

from freep import cli


@pytest.fixture()
def files(tmp_path):
    space = {"points": [0, 1, 2, 4], "base": 0, "p": 1.0,
             "dist": [[0, 1, 2, 4], [1, 0, 1, 3], [2, 1, 0, 2], [4, 3, 2, 0]]}
    paths = {
        "space": tmp_path / "s.json",
        "subset": tmp_path / "n.json",
        "molecule": tmp_path / "m.json",
        "f": tmp_path / "f.json",
        "tree": tmp_path / "t.json",
    }
    paths["space"].write_text(json.dumps(space))
    paths["subset"].write_text(json.dumps({"members": [0, 1]}))
    paths["molecule"].write_text(json.dumps({"coeffs": {"1": 1.0, "4": -2.0}}))
    paths["f"].write_text(json.dumps({"0": [0.0], "1": [1.0]}))
    tree = {"tree": {"vertices": ["r", "a", "b", "c"], "edges": [["r", "a", 1], ["a", "b", 1], ["a", "c", 2]],
                     "root": "r"}, "p": 1.0}
    paths["tree"].write_text(json.dumps(tree))
    return {k: str(v) for k, v in paths.items()}


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_norm(files, capsys):
    code, out = run(capsys, "norm", "--space", files["space"], "--molecule", files["molecule"])
    assert code == 0
    res = json.loads(out)
    # delta(1) - 2 delta(4) on the line: mass 2 travels 4 -> 1 (cost 6), mass 1 travels 1 -> 0
    assert res["value"] == pytest.approx(7.0)
    assert res["certified"]


def test_norm_dual_and_search(files, capsys):
    _, out = run(capsys, "norm", "--space", files["space"], "--molecule", files["molecule"], "--method", "dual")
    assert json.loads(out)["value"] == pytest.approx(7.0)
    _, out = run(capsys, "norm", "--space", files["space"], "--molecule", files["molecule"], "--method", "search")
    assert json.loads(out)["value"] >= 7.0 - 1e-9


def test_distortion_csv(files, capsys):
    code, out = run(capsys, "distortion", "--space", files["space"], "--subset", files["subset"],
                    "--p", "0.5", "--trials", "3", "--seed", "7")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "index,norm_sub,norm_parent,ratio,bound"
    assert len(lines) == 4


def test_whitney(files, capsys):
    code, out = run(capsys, "whitney", "--space", files["space"], "--subset", files["subset"],
                    "--R", "2.0", "--nagata", "greedy")
    data = json.loads(out)
    assert code == 0 and data["report"]["ok"]
    assert set(data) == {"cover", "params", "report"}


def test_pou(files, capsys):
    code, out = run(capsys, "pou", "--space", files["space"], "--subset", files["subset"], "--nu", "40")
    data = json.loads(out)
    assert code == 0 and data["report"]["ok"]
    assert data["constants"]["nu"] == 40.0


def test_extend(files, capsys):
    code, out = run(capsys, "extend", "--space", files["space"], "--subset", files["subset"],
                    "--f", files["f"], "--nu", "40")
    data = json.loads(out)
    assert code == 0
    assert data["measured_lip"] <= data["bound_D"]
    assert set(data["cases"]) == {"boundary", "disjoint", "shared"}


def test_tree_leaves_input(files, capsys):
    code, out = run(capsys, "whitney", "--space", files["tree"], "--subset", files["subset"].replace("n.json", "l.json"))
    assert code == 2
    leaves = files["subset"].replace("n.json", "l.json")
    with open(leaves, "w") as fh:
        fh.write('"leaves"')
    code, out = run(capsys, "whitney", "--space", files["tree"], "--subset", leaves, "--nagata", "tree",
                    "--n", "1", "--lam", "6")
    assert code == 0
    assert json.loads(out)["params"]["kappa"] == 6


def test_grid(capsys):
    code, out = run(capsys, "grid", "--d", "1", "--p", "1", "--q", "1", "--pairs", "30", "--seed", "7")
    data = json.loads(out)
    assert code == 0
    assert data["maxRatio"] <= data["bound"]
    assert data["retraction_identity"]


def test_constants(capsys):
    code, out = run(capsys, "constants", "--p", "0.5")
    names = [a["name"] for a in json.loads(out)["audit"]]
    assert code == 0
    assert "A (primitive product at the minimum)" in names


def test_missing_file_reports_path(capsys, tmp_path):
    missing = str(tmp_path / "nope.json")
    code = cli.main(["norm", "--space", missing, "--molecule", missing])
    assert code == 2
    assert "nope.json" in capsys.readouterr().err


def test_triangle_failure_is_reported(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"points": [0, 1, 2], "base": 0, "p": 1.0,
                               "dist": [[0, 1, 4], [1, 0, 1], [4, 1, 0]]}))
    m = tmp_path / "m.json"
    m.write_text(json.dumps({"coeffs": {"1": 1.0}}))
    assert cli.main(["norm", "--space", str(bad), "--molecule", str(m)]) == 2
    assert "triangle" in capsys.readouterr().err
