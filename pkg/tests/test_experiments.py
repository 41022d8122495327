import json
from pathlib import Path

import numpy as np
import pytest

from geneo_lab.data import ImageDataset
from geneo_lab.experiments import (PRESETS, BlackBox, ConfigError, ExperimentConfig, ModelSpec, cmd_rescaled, cmd_run,
                                   fidelity_on, load_config, read_prediction_table, read_results,
                                   write_prediction_table)
from geneo_lab.persistence import load_model

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def synthetic_digits(n=400, seed=0):
    """Noisy blobs whose position encodes the class."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(10), n // 10)
    raw = (rng.random((n, 28, 28)) * 40).astype(np.uint8)
    for i, c in enumerate(labels):
        r, col = 4 + (c // 5) * 14, 3 + (c % 5) * 5
        raw[i, r:r + 6, col:col + 3] = 255
    return ImageDataset(raw, labels)


def tiny_config(**kw) -> ExperimentConfig:
    doc = {
        "name": "tiny", "subset": None, "bank": {"count": 12, "width": 5, "height": 5, "seed": 0},
        "models": [
            {"id": "mlp", "kind": "mlp", "lr": 1e-2, "max_epochs": 3, "hidden": [6], "patience": 2},
            {"id": "geo1-12", "kind": "geo1", "lr": 2e-2, "max_epochs": 3, "patterns": 12, "expect_params": 130},
            {"id": "geo2-6", "kind": "geo2", "lr": 1e-2, "max_epochs": 2, "patterns": 6},
        ],
        "rescaled_models": [{"id": "geo1-12", "kind": "geo1", "lr": 2e-2, "max_epochs": 2, "patterns": 12}],
        "blackbox": {"kind": "labels"}, "out_dir": None,
    }
    doc.update(kw)
    return ExperimentConfig.from_dict(doc)


@pytest.fixture(scope="module")
def digits():
    return synthetic_digits()


# ----------------------------------------------------------------- configs

@pytest.mark.parametrize("name", sorted(PRESETS))
def test_config_files_equal_presets(name):
    assert load_config(CONFIGS / f"{name}.json") == PRESETS[name]()


def test_presets_validate_without_data():
    for make in PRESETS.values():
        make().validate(check_data=False)


def test_unknown_field_is_rejected():
    with pytest.raises(ConfigError, match="learning_rate"):
        ExperimentConfig.from_dict({"learning_rate": 1})


def test_missing_data_fails_before_training(tmp_path):
    cfg = tiny_config(data_dir=str(tmp_path / "nowhere"))
    with pytest.raises(ConfigError, match="MNIST"):
        cmd_run(cfg, tmp_path / "out")
    assert not (tmp_path / "out" / "results.csv").exists()


@pytest.mark.parametrize("patch,msg", [
    ({"kind": "rnn"}, "kind"), ({"lr": 0}, "positive"), ({"patterns": 99, "kind": "geo1"}, "bank"),
    ({"expect_params": 1}, "parameters"),
])
def test_bad_model_specs(patch, msg):
    spec = {"id": "m", "kind": "mlp", "lr": 1e-3, "max_epochs": 1, "hidden": [3]} | patch
    with pytest.raises(ConfigError, match=msg):
        tiny_config(models=[spec]).validate(check_data=False)


def test_reference_parameter_counts_are_pinned():
    cfg = PRESETS["full"]()
    counts = {m.id: m.expected_params((28, 28)) for m in cfg.models}
    assert counts["geo1-500"] == 5010 and counts["geo2-250"] == 8101 and counts["mlp-784-10"] == 7850
    assert cfg.blackbox.model.expected_params((28, 28)) == 228010


# ----------------------------------------------------------------- runs

def test_run_is_reproducible(tmp_path, digits):
    a = cmd_run(tiny_config(), tmp_path / "a", digits)
    cmd_run(tiny_config(), tmp_path / "b", digits)
    assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()
    assert [r.model_id for r in a.rows] == ["mlp", "geo1-12", "geo2-6"]
    assert not (tmp_path / "a/errors.log").exists()


def test_results_curve_and_models_agree(tmp_path, digits):
    res = cmd_run(tiny_config(), tmp_path, digits)
    rows = {r["model_id"]: r for r in read_results(tmp_path / "results.csv")}
    curve = read_results(tmp_path / "curve.csv")
    for c in curve:
        r = rows[c["model_id"]]
        assert c["complexity"] == r[c["observer"]] and c["accuracy"] == r["accuracy"]
    for r in res.rows:
        m = load_model(tmp_path / "models" / f"{r.model_id}.json")
        assert (m.count_params(), m.count_nonlinearities()) == (r.c1, r.c2)
    # the labels black box makes fidelity equal accuracy
    for r in res.rows:
        assert r.fidelity == pytest.approx(r.accuracy)
    assert rows["geo1-12"]["c1"] == "130" and rows["geo1-12"]["c2"] == "22"


def test_failing_row_is_logged_not_fatal(tmp_path, digits):
    cfg = tiny_config()
    cfg.models.insert(0, ModelSpec(id="bad", kind="cnn", lr=1e-3, max_epochs=1, channels=[2, 2], dense=0))
    res = cmd_run(cfg, tmp_path, digits)
    assert [r.model_id for r in res.rows] == ["mlp", "geo1-12", "geo2-6"]
    assert "bad" in (tmp_path / "errors.log").read_text()


def test_identity_rescale_matches_run(tmp_path, digits):
    cfg = tiny_config()
    cfg.models = list(cfg.rescaled_models)
    plain = cmd_run(cfg, None, digits)
    same = cmd_rescaled(cfg, None, digits, rescale=None)
    assert [(r.accuracy, r.fidelity, r.c1) for r in plain.rows] == [(r.accuracy, r.fidelity, r.c1) for r in same.rows]


def test_rescaled_run_on_14x14(tmp_path, digits):
    res = cmd_rescaled(tiny_config(), tmp_path, digits)
    assert (tmp_path / "results_rescaled.csv").exists()
    (row,) = res.rows
    assert row.model_id == "geo1-12" and row.c1 == 130 and 0 <= row.fidelity <= 1


def test_prediction_table_black_box(tmp_path, digits):
    idx = np.arange(len(digits))
    write_prediction_table(tmp_path / "bb.csv", idx, (digits.labels + 1) % 10, np.full((len(idx), 10), 0.1))
    table = read_prediction_table(tmp_path / "bb.csv")
    assert table[3] == (digits.labels[3] + 1) % 10
    cfg = tiny_config(blackbox={"kind": "table", "path": str(tmp_path / "bb.csv")})
    res = cmd_run(cfg, None, digits)
    for r in res.rows:
        assert r.fidelity <= 1 - r.accuracy + 1e-12   # agreeing with a shifted label map means being wrong


def test_supplied_black_box_object(digits):
    bb = BlackBox("zeros", lambda idx: np.zeros(len(idx), int))
    res = cmd_run(tiny_config(), None, digits, blackbox=bb)
    assert all(0 <= r.fidelity <= 1 for r in res.rows)


def test_fidelity_on_counts_agreement():
    assert fidelity_on(np.arange(4), [1, 2, 3, 4], [1, 2, 0, 4]) == 0.75
    assert fidelity_on(np.arange(3), [0, 0, 0], [0, 0, 0]) == 1.0


def test_config_json_is_written(tmp_path, digits):
    cmd_run(tiny_config(), tmp_path, digits)
    doc = json.loads((tmp_path / "config.json").read_text())
    assert ExperimentConfig.from_dict(doc) == tiny_config()


def test_trained_black_box_heads_the_table(tmp_path, digits):
    cnn = {"id": "cnn", "kind": "cnn", "lr": 3e-3, "max_epochs": 1, "channels": [2, 2], "dense": 4,
           "batch_size": 32}
    res = cmd_run(tiny_config(blackbox={"kind": "cnn", "model": cnn}), tmp_path, digits)
    head = res.rows[0]
    assert head.model_id == "blackbox-cnn" and head.fidelity == 1.0 and head.accuracy == res.blackbox.test_accuracy
    m = load_model(tmp_path / "models" / "blackbox-cnn.json")
    assert (m.count_params(), m.count_nonlinearities()) == (head.c1, head.c2)
    assert read_results(tmp_path / "results.csv")[0]["model_id"] == "blackbox-cnn"
