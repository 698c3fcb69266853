import json
import subprocess
import sys
from importlib import resources

import pytest

from abelrep.cli import dispatch, main


@pytest.fixture
def run(tmp_path, capsys):
    """Write ``doc`` to a file, run the CLI on it, return (exit code, parsed output)."""

    def go(args, doc=None):
        argv = list(args)
        if doc is not None:
            path = tmp_path / "in.json"
            path.write_text(json.dumps(doc))
            argv += ["-i", str(path)]
        code = main(argv)
        out = capsys.readouterr().out
        return code, json.loads(out) if out.strip() else None

    return go


def schema():
    return json.loads(resources.files("abelrep").joinpath("schemas/cli-v1.json").read_text())


def check_schema(doc):
    sch = schema()
    assert set(sch["required"]) <= set(doc)
    assert doc["status"] in sch["properties"]["status"]["enum"]
    if doc["status"] == "ok":
        assert set(sch["payloads"][doc["command"]]["required"]) <= set(doc["payload"])


def test_snf_identity(run):
    code, out = run(["snf"], {"matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})
    assert code == 0 and out["payload"]["diag"] == [1, 1, 1]
    check_schema(out)


def test_dets(run):
    code, out = run(["dets"], {"matrix": [[2, 4], [6, 8]]})
    assert out["payload"]["determinantal"] == [2, 8]


def test_solve_count(run):
    code, out = run(["solve"], {"coeffs": [[1, 2, 2]], "group": [6]})
    assert code == 0 and out["payload"]["count"] == 36
    check_schema(out)


def test_solve_list_and_domains(run):
    code, out = run(["solve", "--list"], {"coeffs": [[1, 1]], "group": [2], "X": [[0], [1]]})
    assert out["payload"]["count"] == 0 and out["payload"]["solutions"] == []


def test_project(run):
    code, out = run(["project", "--var", "1"], {"coeffs": [[1, 2, 2]], "group": [6]})
    assert out["payload"]["elements"] == [[0], [2], [4]]


def test_pipeline_run_and_verify(run, tmp_path):
    code, out = run(["pipeline", "run"], {"coeffs": [[2, 2, 2]], "group": [4]})
    assert code == 0 and out["payload"]["ok"]
    check_schema(out)
    code, again = run(["pipeline", "verify"], out)
    assert code == 0 and again["payload"]["ok"]


def test_represent_roundtrip(run):
    code, built = run(["represent", "build"], {"coeffs": [[1, 1, 1]], "group": [5]})
    assert code == 0 and built["payload"]["report"]["ok"]
    code, verified = run(["represent", "verify"], built)
    rep = verified["payload"]
    assert rep["ok"] and rep["RP1"] and rep["RP4"] and rep["copies"] == 125
    check_schema(verified)
    doc = dict(built["payload"], X=[[0, 1], None, None])
    code, removed = run(["represent", "remove"], doc)
    assert code == 0 and removed["payload"]["verified"]


def test_perm_commands(run):
    code, out = run(["perm", "occurrences", "--tau", "1 0", "--sigma", "2 0 1"])
    assert out["payload"]["count"] == 2
    code, out = run(["perm", "check", "--tau", "0 1", "--sigma", "0 1 2", "--delete"])
    assert out["payload"]["ok"] and out["payload"]["deletion"]["destroyed"]


def test_apps(run):
    code, out = run(["apps", "corners"], {"group": [3], "m": 2, "subset": [[0, 0], [1, 0], [0, 1], [1, 1]]})
    assert out["payload"]["hits"] == 6 and out["payload"]["agree"]
    code, out = run(["apps", "homothetic"], {"group": [5], "subgroups": [[[1]]], "phis": [[[0]], [[0]]]})
    assert out["payload"]["count"] == 5
    check_schema(out)


@pytest.mark.parametrize(
    "argv, doc, code",
    [
        (["frobnicate"], None, 64),
        (["solve", "--cap", "not-a-number"], None, 64),
        (["solve", "--cap", "10"], {"coeffs": [[0, 0, 0, 0]], "group": [7]}, 3),
        (["represent", "build"], {"coeffs": [[1, 1]], "group": [5]}, 2),
        (["solve"], {"coeffs": [[1, 1]]}, 65),
    ],
)
def test_exit_codes(run, argv, doc, code):
    got, _ = run(argv, doc)
    assert got == code


def test_dispatch_returns_result():
    res = dispatch(["perm", "occurrences", "--tau", "0", "--sigma", "0 1"])
    assert res.status == "ok" and res.exit_code == 0 and res.payload["count"] == 2


def test_big_integers_become_strings(run):
    code, out = run(["snf"], {"matrix": [[2**60, 0], [0, 1]]})
    assert out["payload"]["diag"] == [1, str(2**60)]


def test_output_file(tmp_path, capsys):
    src, dst = tmp_path / "a.json", tmp_path / "b.json"
    src.write_text(json.dumps({"coeffs": [[1, 1, 1]], "group": [5]}))
    assert main(["solve", "-i", str(src), "-o", str(dst)]) == 0
    assert json.loads(dst.read_text())["payload"]["count"] == 25
    assert capsys.readouterr().out == ""


def test_byte_identical_across_processes(tmp_path):
    src = tmp_path / "sys.json"
    src.write_text(json.dumps({"coeffs": [[1, 2, 3]], "group": [6]}))
    outs = [
        subprocess.run(
            [sys.executable, "-m", "abelrep", "pipeline", "run", "-i", str(src), "--threads", str(t)],
            capture_output=True, check=True,
        ).stdout
        for t in (1, 4)
    ]
    assert outs[0] == outs[1]
