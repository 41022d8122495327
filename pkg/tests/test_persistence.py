import json

import numpy as np
import pytest

from geneo_lab.models import CnnModel, Geo1Model, Geo2Model, MlpModel, NullModel
from geneo_lab.patterns import PatternBank, sample_patterns
from geneo_lab.persistence import load_bank, load_model, save_bank, save_model


@pytest.fixture(scope="module")
def images():
    return (np.random.default_rng(0).random((10, 28, 28)) ** 3 * 255).astype(np.uint8)


@pytest.fixture(scope="module")
def bank(images):
    return sample_patterns(images, 8, seed=2)


@pytest.mark.parametrize("make", [
    lambda b: Geo1Model(b, seed=1),
    lambda b: Geo2Model(b, seed=1),
    lambda b: MlpModel([784, 6, 10], seed=1),
    lambda b: CnnModel(channels=(4, 3), hidden=7, seed=1),
    lambda b: NullModel(),
], ids=["geo1", "geo2", "mlp", "cnn", "null"])
def test_round_trip(tmp_path, make, bank, images):
    m = make(bank)
    path = save_model(m, tmp_path / "m.json")
    back = load_model(path)
    assert back.kind == m.kind and back.config() == m.config()
    assert back.count_params() == m.count_params()
    assert back.count_nonlinearities() == m.count_nonlinearities()
    for k, v in m.params.items():
        assert back.params[k].tobytes() == v.tobytes()
    if m.params:
        np.testing.assert_array_equal(back.predict_images(images), m.predict_images(images))


def test_manifest_and_blobs(tmp_path, bank):
    m = Geo1Model(bank)
    doc = json.loads(save_model(m, tmp_path / "g.json").read_text())
    assert doc["params"] == 90 and doc["nonlinearities"] == 18
    for b in doc["blobs"]:
        assert b["dtype"] == "f32le"
        raw = (tmp_path / b["file"]).read_bytes()
        assert len(raw) == 4 * int(np.prod(b["shape"]))
    gamma = next(b for b in doc["blobs"] if b["name"] == "gamma")
    stored = np.frombuffer((tmp_path / gamma["file"]).read_bytes(), "<f4").reshape(gamma["shape"])
    np.testing.assert_array_equal(stored, m.params["gamma"])


def test_shape_mismatch_is_reported(tmp_path):
    path = save_model(MlpModel([784, 10]), tmp_path / "m.json")
    doc = json.loads(path.read_text())
    doc["config"]["sizes"] = [784, 11]
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="shape"):
        load_model(path)


def test_truncated_blob(tmp_path):
    path = save_model(MlpModel([4, 3]), tmp_path / "m.json")
    blob = tmp_path / "m.W0.bin"
    blob.write_bytes(blob.read_bytes()[:-4])
    with pytest.raises(ValueError, match="bytes"):
        load_model(path)


def test_unknown_kind(tmp_path):
    path = save_model(MlpModel([4, 3]), tmp_path / "m.json")
    doc = json.loads(path.read_text())
    doc["kind"] = "transformer"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="kind"):
        load_model(path)


def test_bank_round_trip(tmp_path, bank):
    back = load_bank(save_bank(bank, tmp_path / "bank.json"))
    np.testing.assert_array_equal(back.levels, bank.levels)
    np.testing.assert_array_equal(back.patterns, bank.patterns)
    np.testing.assert_array_equal(back.sources, bank.sources)
    np.testing.assert_array_equal(back.centers, bank.centers)


def test_float_bank_round_trip_is_float32(tmp_path):
    pats = np.random.default_rng(3).random((3, 5, 5))
    bank = PatternBank(pats, np.arange(3), np.zeros((3, 2), int), 0)
    back = load_bank(save_bank(bank, tmp_path / "fb.json"))
    assert back.levels is None
    np.testing.assert_array_equal(back.patterns, pats.astype(np.float32))
