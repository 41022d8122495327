"""Model files: a JSON manifest plus little-endian float32 sidecar blobs."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .models import CnnModel, Geo1Model, Geo2Model, MlpModel, Model, NullModel
from .patterns import PatternBank

BLOB_DTYPE = "f32le"
_F32LE = np.dtype("<f4")


def _write_blob(directory: Path, stem: str, name: str, array) -> dict:
    fname = f"{stem}.{name}.bin"
    a = np.ascontiguousarray(array, dtype=_F32LE)
    (directory / fname).write_bytes(a.tobytes())
    return {"name": name, "dtype": BLOB_DTYPE, "shape": list(a.shape), "file": fname}


def _read_blob(directory: Path, entry: dict) -> np.ndarray:
    if entry["dtype"] != BLOB_DTYPE:
        raise ValueError(f"unsupported blob dtype {entry['dtype']!r}")
    shape = tuple(entry["shape"])
    buf = (directory / entry["file"]).read_bytes()
    expected = int(np.prod(shape, dtype=np.int64)) * 4
    if len(buf) != expected:
        raise ValueError(f"blob {entry['file']}: {len(buf)} bytes, expected {expected}")
    return np.frombuffer(buf, dtype=_F32LE).reshape(shape).astype(np.float32)


def save_model(model: Model, path) -> Path:
    """Write ``<path>`` (manifest) and ``<stem>.<blob>.bin`` files next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    blobs = [_write_blob(path.parent, stem, k, v) for k, v in model.params.items()]
    doc = {"kind": model.kind, "config": model.config(), "loss": model.loss_kind,
           "params": model.count_params(), "nonlinearities": model.count_nonlinearities()}
    bank = getattr(model, "bank", None)
    if bank is not None:
        # byte levels are small integers, so float32 stores them exactly
        data = bank.levels if bank.levels is not None else bank.patterns
        blobs.append(_write_blob(path.parent, stem, "bank_levels" if bank.levels is not None else "bank_patterns",
                                 data))
        doc["bank"] = {"sources": [int(s) for s in bank.sources],
                       "centers": [[int(r), int(c)] for r, c in bank.centers], "seed": int(bank.seed)}
    doc["blobs"] = blobs
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def load_model(path) -> Model:
    path = Path(path)
    doc = json.loads(path.read_text())
    arrays = {b["name"]: _read_blob(path.parent, b) for b in doc["blobs"]}
    cfg = doc["config"]
    bank = None
    if "bank" in doc:
        meta = doc["bank"]
        if "bank_levels" in arrays:
            levels = np.rint(arrays.pop("bank_levels")).astype(np.uint8)
            bank = PatternBank(levels.astype(np.float64) / 255.0, np.array(meta["sources"]),
                               np.array(meta["centers"]).reshape(-1, 2), meta["seed"], levels)
        else:
            bank = PatternBank(arrays.pop("bank_patterns").astype(np.float64), np.array(meta["sources"]),
                               np.array(meta["centers"]).reshape(-1, 2), meta["seed"])
    kind = doc["kind"]
    if kind == "geo1":
        model = Geo1Model(bank, n_classes=cfg["classes"])
    elif kind == "geo2":
        model = Geo2Model(bank, image_shape=tuple(cfg["image_shape"]), n_classes=cfg["classes"])
    elif kind == "mlp":
        model = MlpModel(cfg["sizes"])
    elif kind == "cnn":
        model = CnnModel(channels=tuple(cfg["channels"]), hidden=cfg["hidden"],
                         image_shape=tuple(cfg["image_shape"]), n_classes=cfg["classes"])
    elif kind == "null":
        model = NullModel()
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    missing = set(model.params) ^ set(arrays)
    if missing:
        raise ValueError(f"manifest blobs do not match {kind} parameters: {sorted(missing)}")
    for k, v in arrays.items():
        if v.shape != model.params[k].shape:
            raise ValueError(f"blob {k}: shape {v.shape}, expected {model.params[k].shape}")
    model.params = arrays
    model.loss_kind = doc.get("loss", model.loss_kind)
    return model


def save_bank(bank: PatternBank, path) -> Path:
    """A pattern bank on its own (``sample-patterns`` output)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    name = "levels" if bank.levels is not None else "patterns"
    blob = _write_blob(path.parent, stem, name, bank.levels if bank.levels is not None else bank.patterns)
    doc = {"kind": "pattern_bank", "count": bank.count, "height": bank.height, "width": bank.width,
           "seed": int(bank.seed), "sources": [int(s) for s in bank.sources],
           "centers": [[int(r), int(c)] for r, c in bank.centers], "blobs": [blob]}
    path.write_text(json.dumps(doc, indent=1) + "\n")
    return path


def load_bank(path) -> PatternBank:
    path = Path(path)
    doc = json.loads(path.read_text())
    blob = doc["blobs"][0]
    data = _read_blob(path.parent, blob)
    sources, centers = np.array(doc["sources"]), np.array(doc["centers"]).reshape(-1, 2)
    if blob["name"] == "levels":
        levels = np.rint(data).astype(np.uint8)
        return PatternBank(levels.astype(np.float64) / 255.0, sources, centers, doc["seed"], levels)
    return PatternBank(data.astype(np.float64), sources, centers, doc["seed"])
