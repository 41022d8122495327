"""Config-driven MNIST experiments: model tables, fidelity to a black box, rescaled runs."""
from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import geo as G
from .data import (ImageDataset, Split, downscale_2x2_max, load_mnist_dir, mnist_available, resolve_data_dir,
                   stratified_split, stratified_subset)
from .models import (CnnModel, CwmBatch, Geo1Model, Geo2Model, MlpModel, Model, geo1_param_count,
                     geo2_param_count, mlp_param_count)
from .observer import Arrow, EvaluationSet, TranslationCategory, fidelity, surrogate_distance
from .patterns import PatternBank, extract_features, sample_patterns, set_threads
from .perception import finite_space
from .persistence import load_model, save_model
from .train import TrainConfig, accuracy, train

log = logging.getLogger("geneo_lab")

KINDS = ("geo1", "geo2", "mlp", "cnn")


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------- config

@dataclass
class ModelSpec:
    id: str
    kind: str
    lr: float
    max_epochs: int
    patterns: int | None = None          # geo1 / geo2
    hidden: list = field(default_factory=list)   # mlp hidden layer sizes
    channels: list = field(default_factory=lambda: [56, 28])   # cnn
    dense: int = 300                     # cnn hidden units
    batch_size: int = 16
    patience: int = 20
    expect_params: int | None = None

    def expected_params(self, image_shape) -> int:
        h, w = image_shape
        if self.kind == "geo1":
            return geo1_param_count(self.patterns)
        if self.kind == "geo2":
            return geo2_param_count(self.patterns, h * w)
        if self.kind == "mlp":
            return mlp_param_count([h * w, *self.hidden, 10])
        return CnnModel(self.channels, self.dense, image_shape, dtype=np.float32).count_params()

    def validate(self, image_shape, bank_count: int | None = None):
        if self.kind not in KINDS:
            raise ConfigError(f"model {self.id}: unknown kind {self.kind!r}")
        if self.lr <= 0 or self.max_epochs <= 0 or self.batch_size <= 0 or self.patience <= 0:
            raise ConfigError(f"model {self.id}: training hyperparameters must be positive")
        if self.kind in ("geo1", "geo2"):
            if not self.patterns or self.patterns < 1:
                raise ConfigError(f"model {self.id}: pattern count must be at least 1")
            if bank_count is not None and self.patterns > bank_count:
                raise ConfigError(f"model {self.id}: {self.patterns} patterns but the bank has {bank_count}")
        if self.expect_params is not None:
            got = self.expected_params(image_shape)
            if got != self.expect_params:
                raise ConfigError(f"model {self.id}: architecture has {got} parameters, config expects "
                                  f"{self.expect_params}")

    def build(self, image_shape, bank: PatternBank | None, seed: int) -> Model:
        if self.kind == "geo1":
            return Geo1Model(bank.subset(self.patterns), seed=seed)
        if self.kind == "geo2":
            return Geo2Model(bank.subset(self.patterns), image_shape=image_shape, seed=seed)
        if self.kind == "mlp":
            return MlpModel([image_shape[0] * image_shape[1], *self.hidden, 10], seed=seed)
        return CnnModel(self.channels, self.dense, image_shape, seed=seed)

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(lr=self.lr, max_epochs=self.max_epochs, batch_size=self.batch_size, seed=seed,
                           patience=self.patience)


@dataclass
class BankSpec:
    count: int = 150
    width: int = 9
    height: int = 9
    seed: int = 0


@dataclass
class BlackBoxSpec:
    kind: str = "cnn"                    # cnn | labels | table
    model: ModelSpec | None = None       # cnn architecture and training
    path: str | None = None              # persisted cnn manifest or prediction-table CSV
    train_on: str = "full"               # full | subset (which train/val split the cnn uses)


@dataclass
class ExperimentConfig:
    name: str = "desk"
    preset: str = "desk"
    data_dir: str | None = None
    split_seed: int = 0
    model_seed: int = 0
    subset: dict | None = None           # {"train": n, "val": n, "test": n}
    bank: BankSpec = field(default_factory=BankSpec)
    models: list = field(default_factory=list)
    rescaled_models: list = field(default_factory=list)
    blackbox: BlackBoxSpec = field(default_factory=BlackBoxSpec)
    observer: str | None = None
    out_dir: str = "runs/desk"
    threads: int | None = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        d = dict(doc)
        d["bank"] = BankSpec(**d.get("bank", {}))
        d["models"] = [ModelSpec(**m) for m in d.get("models", [])]
        d["rescaled_models"] = [ModelSpec(**m) for m in d.get("rescaled_models", [])]
        bb = dict(d.get("blackbox", {}))
        if bb.get("model") is not None:
            bb["model"] = ModelSpec(**bb["model"])
        d["blackbox"] = BlackBoxSpec(**bb)
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self, check_data: bool = True):
        if self.preset not in ("desk", "full"):
            raise ConfigError(f"unknown preset {self.preset!r}")
        ids = [m.id for m in self.models]
        if len(set(ids)) != len(ids):
            raise ConfigError("model ids must be unique")
        for m in self.models:
            m.validate((28, 28), self.bank.count)
        for m in self.rescaled_models:
            m.validate((14, 14), self.bank.count)
        if self.bank.width % 2 == 0 or self.bank.height % 2 == 0 or self.bank.count < 1:
            raise ConfigError("pattern bank needs odd sides and at least one pattern")
        bb = self.blackbox
        if bb.kind not in ("cnn", "labels", "table"):
            raise ConfigError(f"unknown black-box kind {bb.kind!r}")
        if bb.kind == "cnn" and bb.model is None and bb.path is None:
            raise ConfigError("a cnn black box needs a model spec or a persisted model path")
        if bb.kind == "cnn" and bb.model is not None:
            bb.model.validate((28, 28))
        if bb.kind == "table" and not (bb.path and Path(bb.path).exists()):
            raise ConfigError(f"prediction table {bb.path!r} does not exist")
        if bb.path and bb.kind == "cnn" and not Path(bb.path).exists():
            raise ConfigError(f"black-box model {bb.path!r} does not exist")
        if self.observer and not Path(self.observer).exists():
            raise ConfigError(f"observer file {self.observer!r} does not exist")
        if check_data and not mnist_available(self.data_dir):
            raise ConfigError(f"MNIST IDX files not found in {resolve_data_dir(self.data_dir)} "
                              f"(set data_dir or $GENEO_LAB_DATA)")


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


# reference rows: (patterns or hidden sizes, params, epoch cap, learning rate)
_MLP_ROWS = [([40], 31810, 57, 2e-4), ([20], 15910, 57, 1e-4), ([], 7850, 5, 2e-3),
             ([7], 5575, 58, 2e-4), ([5], 3985, 58, 2e-4), ([4], 3190, 9, 2e-3)]
_GEO1_ROWS = [(500, 5010, 296, 3e-3), (350, 3510, 148, 7e-3), (170, 1710, 456, 2e-2),
              (150, 1510, 564, 1e-2), (120, 1210, 496, 2e-2), (98, 990, 198, 5e-2)]
_GEO2_ROWS = [(250, 8101, 39, 1e-3), (200, 8051, 496, 1e-3), (150, 8001, 483, 1e-3),
              (100, 7951, 335, 1e-3), (50, 7901, 451, 1e-3)]
_CNN = dict(id="cnn", kind="cnn", lr=3e-3, max_epochs=3, batch_size=64, expect_params=228010)


def _mlp_spec(hidden, params, epochs, lr, image_side=28):
    name = "mlp-" + "-".join(str(h) for h in [image_side * image_side, *hidden, 10])
    return ModelSpec(id=name, kind="mlp", lr=lr, max_epochs=epochs, hidden=list(hidden),
                     expect_params=params if image_side == 28 else None)


def _geo_spec(kind, patterns, params, epochs, lr, expect=True):
    return ModelSpec(id=f"{kind}-{patterns}", kind=kind, lr=lr, max_epochs=epochs, patterns=patterns,
                     expect_params=params if expect else None)


def full_config() -> ExperimentConfig:
    """Every reference row on the whole 60/20/20 split."""
    models = [_mlp_spec(*r) for r in _MLP_ROWS]
    models += [_geo_spec("geo1", *r) for r in _GEO1_ROWS]
    models += [_geo_spec("geo2", *r) for r in _GEO2_ROWS]
    rescaled = [_mlp_spec(h, None, e, lr, 14) for h, _, e, lr in (_MLP_ROWS[0], _MLP_ROWS[2], _MLP_ROWS[3],
                                                                   _MLP_ROWS[4])]
    rescaled += [_geo_spec("geo1", p, None, e, lr, expect=False) for p, _, e, lr in
                 (_GEO1_ROWS[0], _GEO1_ROWS[1], _GEO1_ROWS[2], _GEO1_ROWS[5])]
    rescaled += [_geo_spec("geo2", p, None, e, lr, expect=False) for p, _, e, lr in
                 (_GEO2_ROWS[0], _GEO2_ROWS[2], _GEO2_ROWS[4])]
    return ExperimentConfig(name="full", preset="full", subset=None, bank=BankSpec(count=500),
                            models=models, rescaled_models=rescaled,
                            blackbox=BlackBoxSpec("cnn", ModelSpec(**_CNN)), out_dir="runs/full")


def desk_config() -> ExperimentConfig:
    """10k/2k/2k stratified subset, at most 150 patterns, CNN black box on the full train split."""
    models = [_mlp_spec(*r) for r in _MLP_ROWS]
    models += [_geo_spec("geo1", *r) for r in _GEO1_ROWS if r[0] <= 150]
    models += [_geo_spec("geo2", *r) for r in _GEO2_ROWS if r[0] <= 150]
    rescaled = [_mlp_spec(h, None, e, lr, 14) for h, _, e, lr in (_MLP_ROWS[2], _MLP_ROWS[4])]
    rescaled += [_geo_spec("geo1", p, None, e, lr, expect=False) for p, _, e, lr in (_GEO1_ROWS[3], _GEO1_ROWS[5])]
    rescaled += [_geo_spec("geo2", p, None, e, lr, expect=False) for p, _, e, lr in (_GEO2_ROWS[2],)]
    return ExperimentConfig(name="desk", preset="desk", subset={"train": 10000, "val": 2000, "test": 2000},
                            bank=BankSpec(count=150), models=models, rescaled_models=rescaled,
                            blackbox=BlackBoxSpec("cnn", ModelSpec(**_CNN)), out_dir="runs/desk")


PRESETS = {"desk": desk_config, "full": full_config}


# --------------------------------------------------------------------------- data

@dataclass
class Prepared:
    data: ImageDataset
    split: Split          # full 60/20/20 split
    work: Split           # split actually used for the model rows (subset in the desk preset)


def prepare_data(cfg: ExperimentConfig, data: ImageDataset | None = None) -> Prepared:
    data = data if data is not None else load_mnist_dir(cfg.data_dir)
    split = stratified_split(data.labels, cfg.split_seed)
    work = split
    if cfg.subset:
        parts = (split.train, split.val, split.test)
        work = Split(*(stratified_subset(idx, data.labels, cfg.subset[k], cfg.split_seed + 1 + i)
                       for i, (k, idx) in enumerate(zip(("train", "val", "test"), parts))))
    return Prepared(data, split, work)


# --------------------------------------------------------------------------- black boxes

@dataclass
class BlackBox:
    name: str
    predict: object            # callable: global indices -> predicted labels
    model: Model | None = None
    test_accuracy: float | None = None
    seconds: float = 0.0
    info: dict = field(default_factory=dict)


def read_prediction_table(path) -> dict:
    """``index,predicted_class[,score_0..score_9]`` rows into ``{index: class}``."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().lower() == "index":
                continue
            out[int(row[0])] = int(row[1])
    return out


def write_prediction_table(path, indices, preds, scores=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["index", "predicted_class"]
        if scores is not None:
            head += [f"score_{k}" for k in range(scores.shape[1])]
        w.writerow(head)
        for j, (i, p) in enumerate(zip(indices, preds)):
            row = [int(i), int(p)]
            if scores is not None:
                row += [repr(float(s)) for s in scores[j]]
            w.writerow(row)


def train_blackbox(cfg: ExperimentConfig, prep: Prepared) -> tuple[Model, dict]:
    spec = cfg.blackbox.model
    sp_ = prep.split if cfg.blackbox.train_on == "full" else prep.work
    images = prep.data.raw
    model = spec.build((28, 28), None, cfg.model_seed)
    t0 = time.perf_counter()
    hist = train(model, model.prepare(images[sp_.train]), prep.data.labels[sp_.train], spec.train_config(cfg.model_seed),
                 model.prepare(images[sp_.val]), prep.data.labels[sp_.val], log=log.info)
    return model, {"epochs": hist.epochs, "best_epoch": hist.best_epoch, "seconds": time.perf_counter() - t0}


def make_blackbox(cfg: ExperimentConfig, prep: Prepared, out: Path | None = None) -> BlackBox:
    bb = cfg.blackbox
    labels = prep.data.labels
    if bb.kind == "labels":
        return BlackBox("labels", lambda idx: labels[np.asarray(idx)])
    if bb.kind == "table":
        table = read_prediction_table(bb.path)

        def lookup(idx):
            try:
                return np.array([table[int(i)] for i in idx], dtype=np.int64)
            except KeyError as exc:
                raise ConfigError(f"prediction table has no row for index {exc}") from None
        return BlackBox(f"table:{Path(bb.path).name}", lookup)
    t0 = time.perf_counter()
    info = {}
    if bb.path:
        model = load_model(bb.path)
    else:
        model, info = train_blackbox(cfg, prep)
        if out is not None:
            save_model(model, out / "models" / "blackbox-cnn.json")
    cache: dict = {}

    def predict(idx):
        idx = np.asarray(idx)
        key = idx.tobytes()
        if key not in cache:
            cache[key] = model.predict_images(prep.data.raw[idx])
        return cache[key]
    acc = float(np.mean(predict(prep.work.test) == labels[prep.work.test]))
    return BlackBox("cnn", predict, model, acc, time.perf_counter() - t0, info)


# --------------------------------------------------------------------------- rows

@dataclass
class ResultRow:
    model_id: str
    kind: str
    c1: int
    c2: int
    accuracy: float
    fidelity: float | None
    split_seed: int
    model_seed: int
    epochs: int = 0
    best_epoch: int = -1
    runtime: float = 0.0       # reported in timings.csv, not results.csv

    CSV_FIELDS = ("model_id", "kind", "c1", "c2", "accuracy", "fidelity", "split_seed", "model_seed",
                  "epochs", "best_epoch")

    def csv_row(self) -> list:
        vals = []
        for k in self.CSV_FIELDS:
            v = getattr(self, k)
            vals.append("" if v is None else repr(v) if isinstance(v, float) else str(v))
        return vals


def write_results(out: Path, rows: list, name: str = "results.csv"):
    with open(out / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ResultRow.CSV_FIELDS)
        for r in rows:
            w.writerow(r.csv_row())


def write_curve(out: Path, rows: list, name: str = "curve.csv"):
    """One (complexity, accuracy) pair per model and observer, copied from the result rows."""
    with open(out / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["observer", "model_id", "complexity", "accuracy"])
        for obs in ("c1", "c2"):
            for r in rows:
                w.writerow([obs, r.model_id, getattr(r, obs), repr(r.accuracy)])


def write_timings(out: Path, timings: list, name: str = "timings.csv"):
    with open(out / name, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "seconds"])
        for stage, s in timings:
            w.writerow([stage, f"{s:.3f}"])


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --------------------------------------------------------------------------- features

@dataclass
class FeatureSet:
    maxpool: np.ndarray
    cwm: sp.csr_matrix | None
    hw: int

    def geo1(self, k: int) -> np.ndarray:
        return np.ascontiguousarray(self.maxpool[:, :k], dtype=np.float32)

    def geo2(self, k: int) -> CwmBatch:
        return CwmBatch(self.cwm[:, :k].tocsr().astype(np.float32), len(self.maxpool), self.hw)


def features_for(images, bank: PatternBank, with_cwm: bool, threads=None) -> FeatureSet:
    f = extract_features(images, bank, with_cwm=with_cwm, threads=threads)
    h, w = images.shape[1:]
    return FeatureSet(f.maxpool, f.cwm, h * w)


def index_geo(space, labels10, preds, name):
    return G.Geo.lookup(space, labels10, np.asarray(preds, dtype=np.int64), name=name)


def fidelity_on(indices, bb_preds, preds) -> float:
    """Agreement of two label vectors, computed as the discrete identity-pair cost on an index space."""
    n = len(indices)
    space = finite_space(f"points{n}", n)
    labels10 = finite_space("labels10", 10)
    alpha = index_geo(space, labels10, bb_preds, "blackbox")
    beta = index_geo(space, labels10, preds, "surrogate")
    return fidelity(alpha, beta, np.arange(n))


def _row_for(spec: ModelSpec, model: Model, hist, acc: float, fid, cfg: ExperimentConfig, runtime: float):
    return ResultRow(spec.id, spec.kind, model.count_params(), model.count_nonlinearities(), acc, fid,
                     cfg.split_seed, cfg.model_seed, hist.epochs, hist.best_epoch, runtime)


def _run_models(specs, cfg, prep, images, image_shape, bb_test, out, timings, tag="", fid_fn=None):
    labels = prep.data.labels
    w = prep.work
    bank = None
    feats = {}
    geo_specs = [s for s in specs if s.kind in ("geo1", "geo2")]
    if geo_specs:
        t0 = time.perf_counter()
        # one bank per run; smaller rows use its leading patterns
        bank = sample_patterns(images[w.train], cfg.bank.count, cfg.bank.width, cfg.bank.height, cfg.bank.seed)
        with_cwm = any(s.kind == "geo2" for s in geo_specs)
        for part in ("train", "val", "test"):
            feats[part] = features_for(images[getattr(w, part)], bank, with_cwm, cfg.threads)
        timings.append((f"{tag}features", time.perf_counter() - t0))
    rows = []
    for spec in specs:
        t0 = time.perf_counter()
        try:
            model = spec.build(image_shape, bank, cfg.model_seed)
            if spec.kind == "geo1":
                X = {p: feats[p].geo1(spec.patterns) for p in feats}
            elif spec.kind == "geo2":
                X = {p: feats[p].geo2(spec.patterns) for p in feats}
            else:
                X = {p: model.prepare(images[getattr(w, p)]) for p in ("train", "val", "test")}
            hist = train(model, X["train"], labels[w.train], spec.train_config(cfg.model_seed),
                         X["val"], labels[w.val])
            acc = accuracy(model, X["test"], labels[w.test], model.eval_batch)
            preds = np.concatenate([model.predict(model.take(X["test"], np.arange(s, min(s + 2048, len(w.test)))))
                                    for s in range(0, len(w.test), 2048)])
            fid = None if bb_test is None else (fid_fn or fidelity_on)(w.test, bb_test, preds)
            runtime = time.perf_counter() - t0
            row = _row_for(spec, model, hist, acc, fid, cfg, runtime)
            if out is not None:
                save_model(model, out / "models" / f"{tag}{spec.id}.json")
            rows.append(row)
            timings.append((f"{tag}{spec.id}", runtime))
            log.info("%s%s: acc %.4f fid %s (%d epochs, %.1fs)", tag, spec.id, acc,
                     "-" if fid is None else f"{fid:.4f}", hist.epochs, runtime)
        except Exception as exc:          # one bad row must not sink the table
            log.error("row %s%s failed: %s", tag, spec.id, exc)
            timings.append((f"{tag}{spec.id} (failed)", time.perf_counter() - t0))
            if out is not None:
                with open(out / "errors.log", "a") as fh:
                    fh.write(f"{tag}{spec.id}: {type(exc).__name__}: {exc}\n")
    return rows


@dataclass
class RunResult:
    rows: list
    blackbox: BlackBox | None
    out: Path | None
    timings: list


def _start(cfg: ExperimentConfig, out_dir, data) -> tuple[Path | None, Prepared]:
    cfg.validate(check_data=data is None)
    if cfg.threads:
        set_threads(cfg.threads)
    out = Path(out_dir or cfg.out_dir) if (out_dir or cfg.out_dir) else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "errors.log").unlink(missing_ok=True)
        (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1) + "\n")
    return out, prepare_data(cfg, data)


def cmd_run(cfg: ExperimentConfig, out_dir=None, data: ImageDataset | None = None,
            blackbox: BlackBox | None = None) -> RunResult:
    """Train every configured model, score it on the test split and against the black box."""
    out, prep = _start(cfg, out_dir, data)
    timings = []
    bb = blackbox or make_blackbox(cfg, prep, out)
    timings.append(("blackbox", bb.seconds))
    bb_test = bb.predict(prep.work.test)
    rows = _run_models(cfg.models, cfg, prep, prep.data.raw, (28, 28), bb_test, out, timings)
    if bb.model is not None:
        # the black box heads the table; its fidelity to itself is 1 by definition
        rows.insert(0, ResultRow("blackbox-cnn", bb.model.kind, bb.model.count_params(),
                                 bb.model.count_nonlinearities(), bb.test_accuracy, 1.0, cfg.split_seed,
                                 cfg.model_seed, bb.info.get("epochs", 0), bb.info.get("best_epoch", -1),
                                 bb.seconds))
    if out is not None:
        write_results(out, rows)
        write_curve(out, rows)
        write_timings(out, timings)
        if bb.test_accuracy is not None:
            (out / "blackbox.json").write_text(json.dumps({"name": bb.name, "test_accuracy": bb.test_accuracy},
                                                          indent=1) + "\n")
    return RunResult(rows, bb, out, timings)


def rescale_category(n: int):
    """Index-level observer for rescaled runs: point ``i`` of the 28×28 test set goes to point ``i`` at 14×14."""
    big, small, labels10 = finite_space("test28", n), finite_space("test14", n), finite_space("labels10", 10)
    down = G.check_nonexpansive(G.Geo.lookup(big, small, np.arange(n), name="down"))
    arrows = [Arrow("id_test28", G.identity(big), "identity"), Arrow("id_test14", G.identity(small), "identity"),
              Arrow("id_labels10", G.identity(labels10), "identity"), Arrow("down", down, "rescale2x2max")]
    return TranslationCategory.closed_under_composition([big, small, labels10], arrows), big, small, labels10


def cmd_rescaled(cfg: ExperimentConfig, out_dir=None, data: ImageDataset | None = None,
                 blackbox: BlackBox | None = None, rescale=downscale_2x2_max) -> RunResult:
    """Retrain the rescaled model subset on 2×2-max downscaled images (hyperparameters unchanged)."""
    out, prep = _start(cfg, out_dir, data)
    timings = []
    bb = blackbox or make_blackbox(cfg, prep, out)
    bb_test = bb.predict(prep.work.test)
    n = len(prep.work.test)
    cat, big, small, labels10 = rescale_category(n)

    def fid_fn(_idx, bb_preds, preds):
        alpha = index_geo(big, labels10, bb_preds, "blackbox")
        beta = index_geo(small if rescale is not None else big, labels10, preds, "surrogate")
        return 1.0 - surrogate_distance(cat, alpha, beta, EvaluationSet(np.arange(n), "discrete")).value

    t0 = time.perf_counter()
    images = rescale(prep.data.raw) if rescale is not None else prep.data.raw
    timings.append(("rescale", time.perf_counter() - t0))
    shape = tuple(images.shape[1:])
    specs = cfg.rescaled_models
    rows = _run_models(specs, cfg, prep, images, shape, bb_test, out, timings, tag="r14-" if rescale else "",
                       fid_fn=fid_fn)
    if out is not None:
        write_results(out, rows, "results_rescaled.csv")
        write_curve(out, rows, "curve_rescaled.csv")
        write_timings(out, timings, "timings_rescaled.csv")
    return RunResult(rows, bb, out, timings)
