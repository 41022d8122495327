import json

import numpy as np
import pytest

from geneo_lab import geo as G
from geneo_lab.cli import main
from geneo_lab.data import MNIST_FILES, write_idx
from geneo_lab.experiments import read_results
from geneo_lab.perception import finite_space, space_to_json

from test_experiments import synthetic_digits, tiny_config


@pytest.fixture(scope="module")
def idx_dir(tmp_path_factory):
    """Synthetic digits written as the four MNIST IDX files."""
    d = tmp_path_factory.mktemp("idx")
    ds = synthetic_digits(300, seed=1)
    write_idx(d / MNIST_FILES["train_images"], ds.raw[:200])
    write_idx(d / MNIST_FILES["train_labels"], ds.labels[:200].astype(np.uint8))
    write_idx(d / MNIST_FILES["test_images"], ds.raw[200:])
    write_idx(d / MNIST_FILES["test_labels"], ds.labels[200:].astype(np.uint8))
    return d


@pytest.fixture
def tiny_json(tmp_path, idx_dir):
    doc = tiny_config(data_dir=str(idx_dir)).to_dict()
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc))
    return path


# ----------------------------------------------------------------- experiment commands

def test_run_writes_results(tmp_path, tiny_json, capsys):
    assert main(["run", "--config", str(tiny_json), "--out", str(tmp_path / "out")]) == 0
    rows = read_results(tmp_path / "out" / "results.csv")
    assert [r["model_id"] for r in rows] == ["mlp", "geo1-12", "geo2-6"]
    assert "geo1-12" in capsys.readouterr().out


def test_rescaled_command(tmp_path, tiny_json):
    assert main(["rescaled", "--config", str(tiny_json), "--out", str(tmp_path)]) == 0
    (row,) = read_results(tmp_path / "results_rescaled.csv")
    assert row["model_id"] == "geo1-12"


def test_run_without_data_exits_2(tmp_path, capsys):
    code = main(["run", "--config", "desk", "--data", str(tmp_path / "missing"), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "MNIST" in capsys.readouterr().err
    assert not (tmp_path / "o" / "results.csv").exists()


def test_sample_patterns(tmp_path, tiny_json, capsys):
    assert main(["sample-patterns", "--config", str(tiny_json), "--count", "7", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "bank.json").read_text())
    assert doc["count"] == 7 and doc["height"] == 5


def test_distance_between_prediction_tables(tmp_path, tiny_json, capsys):
    from geneo_lab.experiments import write_prediction_table
    idx = np.arange(300)
    write_prediction_table(tmp_path / "a.csv", idx, idx % 10)
    write_prediction_table(tmp_path / "b.csv", idx, idx % 10)
    assert main(["distance", "--config", str(tiny_json), "--alpha", str(tmp_path / "a.csv"),
                 "--beta", str(tmp_path / "b.csv"), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["h"] == 0.0


# ----------------------------------------------------------------- verify

def test_verify_all_synthetic(capsys):
    assert main(["verify", "all", "--synthetic", "--instances", "3"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") >= 6 and "FAIL" not in out


def test_injected_expansive_arrow_fails(capsys):
    assert main(["verify", "hemi-metric", "--instances", "3", "--inject-expansive"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out and "expansive" in out


def test_unknown_suite(capsys):
    assert main(["verify", "nonsense"]) == 2
    assert "unknown suite" in capsys.readouterr().err


# ----------------------------------------------------------------- distance instance

def test_distance_instance(tmp_path, capsys):
    X, Y = finite_space("X", 3), finite_space("Y", 2)
    a = G.Geo(X, Y, table=[0, 1, 1], name="a")
    b = G.Geo(X, Y, table=[0, 0, 1], name="b")
    doc = {"spaces": [space_to_json(X), space_to_json(Y)],
           "geos": {"a": G.geo_to_json(a), "b": G.geo_to_json(b)},
           "observer": {"translations": {"objects": ["X", "Y"], "arrows": [
               {"id": "idX", "dom": "X", "cod": "X", "kind": "identity"},
               {"id": "idY", "dom": "Y", "cod": "Y", "kind": "identity"}]}},
           "alpha": "a", "beta": "b"}
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(doc))
    assert main(["distance", "--instance", str(path), "--format", "json"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["h"] == pytest.approx(1 / 3)
    assert main(["distance", "--instance", str(path), "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("pair")


# ----------------------------------------------------------------- diagrams

def test_complexity_builtins(capsys):
    assert main(["complexity", "--builtin", "geo1:500", "--assignment", "params", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["complexity"] == 5010
    assert main(["complexity", "--builtin", "mlp:784-40-10", "--assignment", "nonlinearities",
                 "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["complexity"] == 50


def test_complexity_of_file_with_assignment(tmp_path, capsys):
    (tmp_path / "d.dsl").write_text("sort A; gen f : A -> A @2; diagram d = f ; f;")
    (tmp_path / "costs.json").write_text('{"f": 4}')
    assert main(["complexity", str(tmp_path / "d.dsl"), "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["complexity"] == 4
    assert main(["complexity", str(tmp_path / "d.dsl"), "--assignment", str(tmp_path / "costs.json"),
                 "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["complexity"] == 8


def test_check_diagram_ok_and_error(tmp_path, capsys):
    good = tmp_path / "good.dsl"
    good.write_text("sort A; sort B;\ngen f : A -> B;\ndiagram d = f ; id[B];\n")
    assert main(["check-diagram", str(good)]) == 0
    assert capsys.readouterr().out.strip() == "d : A -> B"
    bad = tmp_path / "bad.dsl"
    bad.write_text("sort A; sort B;\ngen f : A -> B;\ndiagram d = f ; f;\n")
    assert main(["check-diagram", str(bad)]) == 1
    err = capsys.readouterr().err
    assert err.startswith(f"{bad}:3:") and "TypeCheckError" in err
