"""Mini-batch training with early stopping on validation accuracy."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .models import Model


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    lr: float = 1e-3
    max_epochs: int = 100
    batch_size: int = 64
    seed: int = 0
    patience: int = 20
    loss: str = "auto"            # auto | bce | ce
    optimizer: str = "adam"       # adam | sgd
    eval_batch: int = 4096

    def __post_init__(self):
        if not (self.lr > 0 and self.max_epochs > 0 and self.batch_size > 0 and self.patience > 0):
            raise ValueError(f"training hyperparameters must be positive: {self}")
        if self.loss not in ("auto", "bce", "ce"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def to_dict(self) -> dict:
        return asdict(self)


class Sgd:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: dict, grads: dict):
        for k, g in grads.items():
            params[k] -= params[k].dtype.type(self.lr) * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: dict = {}
        self.v: dict = {}

    def step(self, params: dict, grads: dict):
        self.t += 1
        c1 = 1 - self.b1 ** self.t
        c2 = 1 - self.b2 ** self.t
        for k, g in grads.items():
            p = params[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(p)
                self.v[k] = np.zeros_like(p)
            m, v = self.m[k], self.v[k]
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p -= (self.lr / c1) * m / (np.sqrt(v / c2) + self.eps)


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_accuracy: float = -1.0
    seconds: float = 0.0

    @property
    def epochs(self) -> int:
        return len(self.train_loss)


def accuracy(model: Model, inputs, labels, batch: int = 4096) -> float:
    n = model.n_inputs(inputs)
    pred = np.concatenate([model.predict(model.take(inputs, np.arange(s, min(s + batch, n))))
                           for s in range(0, n, batch)])
    return float(np.mean(pred == np.asarray(labels)))


def train(model: Model, inputs, targets, cfg: TrainConfig, val_inputs=None, val_targets=None,
          log=None) -> History:
    """Fit ``model`` in place on prepared ``inputs`` against class ``targets``.

    ``targets`` are ground-truth labels or the predicted labels of a black box.
    With a validation set, training stops after ``cfg.patience`` epochs without
    a new best validation accuracy and the best weights are restored.
    """
    if cfg.loss != "auto":
        model.loss_kind = cfg.loss
    targets = np.asarray(targets)
    n = model.n_inputs(inputs)
    if len(targets) != n:
        raise ValueError(f"{n} inputs but {len(targets)} targets")
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(cfg.lr) if cfg.optimizer == "adam" else Sgd(cfg.lr)
    hist = History()
    best = model.snapshot()
    since_best = 0
    t0 = time.perf_counter()
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = np.sort(order[s:s + cfg.batch_size])
            loss, grads = model.loss_and_grad(model.take(inputs, idx), targets[idx])
            if not math.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss {loss} at epoch {epoch}, batch {s // cfg.batch_size}; "
                                       f"learning rate {cfg.lr} is probably too high")
            total += loss * len(idx)
            opt.step(model.params, grads)
        hist.train_loss.append(total / n)
        if val_inputs is None:
            best, hist.best_epoch = None, epoch
            continue
        acc = accuracy(model, val_inputs, val_targets, min(cfg.eval_batch, model.eval_batch))
        hist.val_accuracy.append(acc)
        if log:
            log(f"epoch {epoch + 1}: loss {hist.train_loss[-1]:.5f} val acc {acc:.4f}")
        if acc > hist.best_val_accuracy:
            hist.best_val_accuracy, hist.best_epoch = acc, epoch
            best = model.snapshot()
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    if best is not None:
        model.restore(best)
    hist.seconds = time.perf_counter() - t0
    return hist
