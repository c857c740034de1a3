import csv
import io
import json

import numpy as np
import pytest

from bnf import cli, counterexample
from bnf.errors import DegenerateBatch
from bnf.nn_core import Dataset
from bnf.objective import bn_cost, standard_cost


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_reproduce(capsys):
    code, out, _ = run(capsys, "reproduce")
    assert code == 0
    doc = json.loads(out)
    for key in ("standard_optimum", "bn_gradient_at_W0", "critical_direction", "inequality_rhs", "verdict"):
        assert key in doc
    assert [round(v, 2) for v in doc["bn_gradient_at_W0"]] == [-0.34, 0.11]
    assert doc["verdict"] == "lemma_violated"
    assert doc["display"]["bn_gradient_at_W0"] == [-0.3393, 0.1131]


def test_reproduce_to_file(capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run(capsys, "reproduce", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["verdict"] == "lemma_violated"


def test_reproduce_failure_names_stage(capsys, monkeypatch):
    ex = counterexample.example_dataset()
    linear = Dataset(ex.inputs, ex.inputs @ np.array([1.0, 3.0]))
    monkeypatch.setattr(counterexample, "example_dataset", lambda: linear)
    code, out, err = run(capsys, "reproduce")
    assert code == 1
    assert "bn_noncritical" in err
    assert json.loads(out)["failed_stage"] == "bn_noncritical"


def test_gradcheck(capsys):
    code, out, _ = run(capsys, "gradcheck", "--trials", "100", "--seed", "7")
    assert code == 0
    doc = json.loads(out)
    assert doc["max_rel_err"] <= 1e-5 and doc["passed"]
    _, again, _ = run(capsys, "gradcheck", "--trials", "100", "--seed", "7")
    assert again == out


def test_gradcheck_usage(capsys):
    assert run(capsys, "gradcheck", "--trials", "0")[0] == 2
    assert run(capsys, "gradcheck", "--trials", "many")[0] == 2
    assert run(capsys, "gradcheck", "--format", "csv")[0] == 2


def test_seed_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("BNF_SEED", "7")
    _, env_out, _ = run(capsys, "gradcheck", "--trials", "5")
    assert json.loads(env_out)["seed"] == 7
    _, flag_out, _ = run(capsys, "gradcheck", "--trials", "5", "--seed", "3")
    assert json.loads(flag_out)["seed"] == 3
    monkeypatch.setenv("BNF_SEED", "x")
    assert run(capsys, "gradcheck", "--trials", "5")[0] == 2


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def test_landscape_grid(capsys):
    code, out, _ = run(capsys, "landscape", "--w1", "1", "2", "--w2", "2", "4", "--n", "3")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["w1", "w2", "cost_standard", "cost_bn"]
    assert len(rows) == 9
    assert [(float(r[0]), float(r[1])) for r in rows[:3]] == [(1, 2), (1, 3), (1, 4)]
    row13 = next(r for r in rows if (float(r[0]), float(r[1])) == (1.0, 3.0))
    assert float(row13[2]) == 12.0


def test_landscape_roundtrip_and_degenerate_point(capsys):
    code, out, _ = run(capsys, "landscape", "--w1", "-1", "1", "--w2", "-1", "1", "--n", "5")
    assert code == 0
    _, rows = parse_csv(out)
    ex = counterexample.example_dataset()
    blank = 0
    for r in rows:
        w = np.array([float(r[0]), float(r[1])])
        assert abs(standard_cost(w, ex) - float(r[2])) <= 1e-12
        if r[3] == "":
            blank += 1
            with pytest.raises(DegenerateBatch):
                bn_cost(w, ex)
        else:
            assert abs(bn_cost(w, ex) - float(r[3])) <= 1e-12
    assert blank == 1  # only the origin


def test_landscape_ray_rows_share_cost(capsys):
    code, out, _ = run(capsys, "landscape", "--w1", "0", "10", "--w2", "0", "6", "--n", "11")
    _, rows = parse_csv(out)
    on_ray = [float(r[3]) for r in rows if float(r[0]) > 0 and abs(3 * float(r[0]) - 5 * float(r[1])) < 1e-12]
    assert len(on_ray) >= 2
    assert max(on_ray) - min(on_ray) <= 1e-9


def test_landscape_usage(capsys):
    assert run(capsys, "landscape", "--w1", "2", "1")[0] == 2
    assert run(capsys, "landscape", "--n", "0")[0] == 2
    assert run(capsys, "landscape", "--w1", "1")[0] == 2
    code, out, _ = run(capsys, "landscape", "--format", "json", "--n", "2")
    assert code == 0 and len(json.loads(out)["rows"]) == 4


def test_search_example1(capsys):
    code, out, _ = run(capsys, "search", "--trials", "1", "--example1")
    assert code == 0
    doc = json.loads(out)
    assert doc["violated"] == 1
    v = doc["violations"][0]
    assert v["dataset"] == counterexample.example_dataset().to_dict()
    assert v["W0"] == [1.0, 3.0]
    assert v["rhs"] <= 1e-12 < v["lhs"]


def test_search_usage(capsys):
    assert run(capsys, "search", "--trials", "0")[0] == 2
    assert run(capsys, "search", "--p", "3", "--n", "3")[0] == 2
    assert run(capsys, "search", "--threads", "0")[0] == 2
    assert run(capsys)[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_search_byte_identical(capsys, tmp_path):
    args = ["search", "--trials", "20", "--seed", "4", "--p", "2", "--n", "5"]
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    _, c, _ = run(capsys, *args, "--threads", "3")
    assert a == b == c
    doc = json.loads(a)
    assert doc["violated"] + doc["held"] + doc["skipped"] == 20


def test_search_pilot_finds_violations(capsys):
    code, out, _ = run(capsys, "search", "--trials", "200", "--seed", "1", "--p", "2", "--n", "3")
    assert code == 0
    assert json.loads(out)["violated"] >= 1
