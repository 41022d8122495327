"""Trainable classifiers with hand-written forward and backward passes.

All models expose the same small protocol used by :mod:`geneo_lab.train`:

* ``prepare(images)`` turns an image stack into model inputs (features for
  the pattern models, flattened pixels for the MLP, NHWC tensors for the CNN);
* ``take(inputs, idx)`` selects a batch;
* ``logits(inputs)`` and ``loss_and_grad(inputs, labels)``.

Sigmoid-headed models use per-class binary cross-entropy, the CNN uses softmax
cross-entropy.  Losses are averaged over the batch and summed over classes.
"""
from __future__ import annotations

import copy as _copy
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit, log_softmax, softmax

from .patterns import PatternBank, extract_features

N_CLASSES = 10


def one_hot(labels, n: int = N_CLASSES, dtype=np.float32) -> np.ndarray:
    y = np.zeros((len(labels), n), dtype=dtype)
    y[np.arange(len(labels)), np.asarray(labels)] = 1
    return y


def uniform_init(rng: np.random.Generator, shape, fan_in: int, dtype=np.float32) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def bce_with_logits(z: np.ndarray, y: np.ndarray):
    """Mean-over-batch, sum-over-classes BCE and its gradient w.r.t. ``z``."""
    n = len(z)
    loss = float(np.sum(np.logaddexp(0, z) - y * z, dtype=np.float64) / n)
    return loss, (expit(z) - y) / z.dtype.type(n)


def softmax_ce(z: np.ndarray, labels: np.ndarray):
    n = len(z)
    lp = log_softmax(z, axis=1)
    loss = float(-lp[np.arange(n), labels].sum(dtype=np.float64) / n)
    g = np.exp(lp)
    g[np.arange(n), labels] -= 1
    return loss, g / z.dtype.type(n)


class Model:
    kind = "model"
    loss_kind = "bce"
    eval_batch = 2048

    def __init__(self):
        self.params: dict = {}

    # protocol
    def prepare(self, images):
        raise NotImplementedError

    def take(self, inputs, idx):
        return inputs[idx]

    def n_inputs(self, inputs) -> int:
        return len(inputs)

    def logits(self, inputs):
        return self._forward(inputs)[0]

    def scores(self, inputs) -> np.ndarray:
        z = self.logits(inputs)
        return softmax(z, axis=1) if self.loss_kind == "ce" else expit(z)

    def predict(self, inputs) -> np.ndarray:
        return np.argmax(self.logits(inputs), axis=1)

    def predict_images(self, images, batch: int | None = None) -> np.ndarray:
        images = np.asarray(images)
        batch = batch or self.eval_batch
        out = [self.predict(self.prepare(images[s:s + batch])) for s in range(0, len(images), batch)]
        return np.concatenate(out) if out else np.zeros(0, np.int64)

    def scores_images(self, images, batch: int | None = None) -> np.ndarray:
        images = np.asarray(images)
        batch = batch or self.eval_batch
        return np.concatenate([self.scores(self.prepare(images[s:s + batch]))
                               for s in range(0, len(images), batch)])

    def loss_and_grad(self, inputs, labels):
        z, cache = self._forward(inputs)
        if self.loss_kind == "ce":
            loss, dz = softmax_ce(z, np.asarray(labels))
        else:
            loss, dz = bce_with_logits(z, one_hot(labels, z.shape[1], z.dtype))
        return loss, self._backward(dz, cache)

    def loss(self, inputs, labels) -> float:
        z = self.logits(inputs)
        if self.loss_kind == "ce":
            return softmax_ce(z, np.asarray(labels))[0]
        return bce_with_logits(z, one_hot(labels, z.shape[1], z.dtype))[0]

    def _forward(self, inputs):
        raise NotImplementedError

    def activation_pattern(self, inputs):
        """Discrete state of every kink (ReLU masks, pool argmaxes); None if smooth."""
        return None

    def _backward(self, dz, cache) -> dict:
        raise NotImplementedError

    # bookkeeping
    def count_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def count_nonlinearities(self) -> int:
        raise NotImplementedError

    def config(self) -> dict:
        raise NotImplementedError

    def astype(self, dtype) -> "Model":
        m = _copy.copy(self)
        m.params = {k: v.astype(dtype) for k, v in self.params.items()}
        return m

    def snapshot(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def restore(self, snap: dict):
        self.params = {k: v.copy() for k, v in snap.items()}

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype if self.params else np.float32


# --------------------------------------------------------------------------- GEO1

class Geo1Model(Model):
    """Image-wide maxpool of pattern activations followed by a sigmoid head.

    ``scores = σ(L γᵀ + b)`` with ``L_i`` the best match of pattern ``i``
    anywhere on the torus, so predictions are invariant under cyclic shifts.
    """

    kind = "geo1"

    def __init__(self, bank: PatternBank, n_classes: int = N_CLASSES, seed: int = 0, dtype=np.float32):
        super().__init__()
        self.bank, self.n_classes, self.threads = bank, n_classes, None
        rng = np.random.default_rng(seed)
        P = bank.count
        self.params = {"gamma": uniform_init(rng, (n_classes, P), P, dtype),
                       "b": uniform_init(rng, (n_classes,), P, dtype)}

    def prepare(self, images):
        return extract_features(images, self.bank, threads=self.threads).maxpool.astype(self.dtype)

    def _forward(self, L):
        p = self.params
        return L @ p["gamma"].T + p["b"], L

    def _backward(self, dz, L):
        return {"gamma": dz.T @ L, "b": dz.sum(0)}

    def count_nonlinearities(self) -> int:
        return self.bank.count + self.n_classes      # one max per channel, one sigmoid per class

    def config(self) -> dict:
        return {"patterns": self.bank.count, "pattern_size": [self.bank.height, self.bank.width],
                "classes": self.n_classes}


# --------------------------------------------------------------------------- GEO2

@dataclass
class CwmBatch:
    """Channel-wise-max maps: CSR with rows ``image * hw + position`` and one column per pattern."""

    cwm: sp.csr_matrix
    n: int
    hw: int

    def __len__(self):
        return self.n


class Geo2Model(Model):
    """Channel-wise max, a sigmoid mix of the channels, then a dense sigmoid head.

    ``L = σ(Σ_i w_i CWM_i + b)`` over the ``h × w`` grid (one shared bias),
    ``scores = σ(W_head vec(L) + b_head)``.  The head is position dependent.
    """

    kind = "geo2"

    def __init__(self, bank: PatternBank, image_shape=(28, 28), n_classes: int = N_CLASSES, seed: int = 0,
                 dtype=np.float32):
        super().__init__()
        self.bank, self.image_shape, self.n_classes, self.threads = bank, tuple(image_shape), n_classes, None
        rng = np.random.default_rng(seed)
        P, hw = bank.count, self.hw
        self.params = {"w": uniform_init(rng, (P,), P, dtype), "b": uniform_init(rng, (1,), P, dtype),
                       "head": uniform_init(rng, (n_classes, hw), hw, dtype),
                       "head_b": uniform_init(rng, (n_classes,), hw, dtype)}

    @property
    def hw(self) -> int:
        return self.image_shape[0] * self.image_shape[1]

    def prepare(self, images):
        images = np.asarray(images)
        if tuple(images.shape[-2:]) != self.image_shape:
            raise ValueError(f"images of shape {images.shape[-2:]} for a model on {self.image_shape}")
        f = extract_features(images, self.bank, with_cwm=True, threads=self.threads)
        return CwmBatch(f.cwm.astype(self.dtype), len(f), self.hw)

    def take(self, inputs: CwmBatch, idx):
        idx = np.asarray(idx)
        rows = (idx[:, None] * inputs.hw + np.arange(inputs.hw)[None, :]).ravel()
        return CwmBatch(inputs.cwm[rows], len(idx), inputs.hw)

    def _forward(self, X: CwmBatch):
        p = self.params
        L = expit(X.cwm @ p["w"] + p["b"][0]).reshape(X.n, X.hw).astype(p["w"].dtype, copy=False)
        return L @ p["head"].T + p["head_b"], (X, L)

    def _backward(self, dz, cache):
        X, L = cache
        p = self.params
        dL = dz @ p["head"]
        dz1 = (dL * L * (1 - L)).ravel()
        return {"w": X.cwm.T @ dz1, "b": np.array([dz1.sum()], dtype=dz1.dtype),
                "head": dz.T @ L, "head_b": dz.sum(0)}

    def count_nonlinearities(self) -> int:
        # per channel: the max and the keep-only-argmax mask; one mixing sigmoid; one sigmoid per class
        return 2 * self.bank.count + 1 + self.n_classes

    def config(self) -> dict:
        return {"patterns": self.bank.count, "pattern_size": [self.bank.height, self.bank.width],
                "image_shape": list(self.image_shape), "classes": self.n_classes}


# --------------------------------------------------------------------------- MLP

class MlpModel(Model):
    """Dense layers, ReLU on hidden units and a sigmoid output layer."""

    kind = "mlp"

    def __init__(self, sizes, seed: int = 0, dtype=np.float32):
        super().__init__()
        self.sizes = [int(s) for s in sizes]
        if len(self.sizes) < 2:
            raise ValueError("an MLP needs at least input and output sizes")
        self.n_classes = self.sizes[-1]
        rng = np.random.default_rng(seed)
        for k, (a, b) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            self.params[f"W{k}"] = uniform_init(rng, (b, a), a, dtype)
            self.params[f"b{k}"] = uniform_init(rng, (b,), a, dtype)

    def prepare(self, images):
        images = np.asarray(images)
        x = images.reshape(len(images), -1)
        if x.dtype == np.uint8:
            return x.astype(self.dtype) / self.dtype.type(255)
        return x.astype(self.dtype, copy=False)

    def _forward(self, x):
        acts = [x]
        n = len(self.sizes) - 1
        for k in range(n):
            z = acts[-1] @ self.params[f"W{k}"].T + self.params[f"b{k}"]
            if k < n - 1:
                z = np.maximum(z, 0)
            acts.append(z)
        return acts[-1], acts

    def _backward(self, dz, acts):
        g = {}
        n = len(self.sizes) - 1
        for k in range(n - 1, -1, -1):
            g[f"W{k}"] = dz.T @ acts[k]
            g[f"b{k}"] = dz.sum(0)
            if k:
                dz = (dz @ self.params[f"W{k}"]) * (acts[k] > 0)
        return g

    def activation_pattern(self, inputs):
        acts = self._forward(inputs)[1]
        return np.concatenate([(a > 0).ravel() for a in acts[1:-1]]) if len(acts) > 2 else None

    def count_nonlinearities(self) -> int:
        return int(sum(self.sizes[1:]))

    def config(self) -> dict:
        return {"sizes": self.sizes}


# --------------------------------------------------------------------------- CNN

def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(B, H, W, C) -> (B, H-k+1, W-k+1, C*k*k) valid windows, ordered (C, kh, kw)."""
    win = sliding_window_view(x, (k, k), axis=(1, 2))      # (B, oh, ow, C, k, k)
    B, oh, ow = win.shape[:3]
    return win.reshape(B, oh, ow, -1)


def _col2im(dcols: np.ndarray, shape, k: int) -> np.ndarray:
    B, H, W, C = shape
    oh, ow = H - k + 1, W - k + 1
    d = dcols.reshape(B, oh, ow, C, k, k)
    dx = np.zeros(shape, dtype=dcols.dtype)
    for i in range(k):
        for j in range(k):
            dx[:, i:i + oh, j:j + ow, :] += d[..., i, j]
    return dx


def _maxpool2(x: np.ndarray):
    """2×2 max pooling with floor; returns output and the flat argmax inside each block."""
    B, H, W, C = x.shape
    oh, ow = H // 2, W // 2
    blocks = x[:, :2 * oh, :2 * ow, :].reshape(B, oh, 2, ow, 2, C).transpose(0, 1, 3, 5, 2, 4)
    blocks = blocks.reshape(B, oh, ow, C, 4)
    arg = blocks.argmax(-1)
    out = np.take_along_axis(blocks, arg[..., None], -1)[..., 0]
    return out, arg


def _maxpool2_backward(dout: np.ndarray, arg: np.ndarray, shape):
    B, H, W, C = shape
    oh, ow = H // 2, W // 2
    d = np.zeros((B, oh, ow, C, 4), dtype=dout.dtype)
    np.put_along_axis(d, arg[..., None], dout[..., None], -1)
    d = d.reshape(B, oh, ow, C, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(B, 2 * oh, 2 * ow, C)
    dx = np.zeros(shape, dtype=dout.dtype)
    dx[:, :2 * oh, :2 * ow, :] = d
    return dx


class CnnModel(Model):
    """Two 3×3 valid convolution + ReLU + 2×2 max-pool stages, then a ReLU dense layer and a softmax head.

    The reference configuration (56, 28 channels, 300 hidden units on 28×28
    inputs) has 228,010 parameters.
    """

    kind = "cnn"
    loss_kind = "ce"
    eval_batch = 256

    def __init__(self, channels=(56, 28), hidden: int = 300, image_shape=(28, 28), n_classes: int = N_CLASSES,
                 seed: int = 0, dtype=np.float32):
        super().__init__()
        self.channels, self.hidden = tuple(int(c) for c in channels), int(hidden)
        if self.hidden < 1 or min(self.channels) < 1:
            raise ValueError(f"cnn sizes must be positive, got channels {self.channels} and {self.hidden} hidden")
        self.image_shape, self.n_classes = tuple(image_shape), n_classes
        rng = np.random.default_rng(seed)
        c1, c2 = self.channels
        self.params = {
            "conv1": uniform_init(rng, (c1, 1 * 9), 9, dtype), "conv1_b": uniform_init(rng, (c1,), 9, dtype),
            "conv2": uniform_init(rng, (c2, c1 * 9), c1 * 9, dtype),
            "conv2_b": uniform_init(rng, (c2,), c1 * 9, dtype),
        }
        flat = self.flat_size
        self.params.update({
            "fc1": uniform_init(rng, (hidden, flat), flat, dtype), "fc1_b": uniform_init(rng, (hidden,), flat, dtype),
            "fc2": uniform_init(rng, (n_classes, hidden), hidden, dtype),
            "fc2_b": uniform_init(rng, (n_classes,), hidden, dtype),
        })

    def _spatial(self):
        h, w = self.image_shape
        h1, w1 = h - 2, w - 2
        p1 = (h1 // 2, w1 // 2)
        h2, w2 = p1[0] - 2, p1[1] - 2
        p2 = (h2 // 2, w2 // 2)
        return (h1, w1), p1, (h2, w2), p2

    @property
    def flat_size(self) -> int:
        p2 = self._spatial()[3]
        return p2[0] * p2[1] * self.channels[1]

    def prepare(self, images):
        images = np.asarray(images)
        x = images.reshape(len(images), *self.image_shape, 1)
        if x.dtype == np.uint8:
            return x.astype(self.dtype) / self.dtype.type(255)
        return x.astype(self.dtype, copy=False)

    def _forward(self, x):
        p = self.params
        B = len(x)
        c1 = _im2col(x, 3)
        a1 = np.maximum(c1 @ p["conv1"].T + p["conv1_b"], 0)
        m1, arg1 = _maxpool2(a1)
        c2 = _im2col(m1, 3)
        a2 = np.maximum(c2 @ p["conv2"].T + p["conv2_b"], 0)
        m2, arg2 = _maxpool2(a2)
        f = m2.reshape(B, -1)
        h = np.maximum(f @ p["fc1"].T + p["fc1_b"], 0)
        z = h @ p["fc2"].T + p["fc2_b"]
        return z, (x, c1, a1, arg1, m1, c2, a2, arg2, f, h)

    def activation_pattern(self, inputs):
        _, (_, _, a1, arg1, _, _, a2, arg2, _, h) = self._forward(inputs)
        return np.concatenate([(a1 > 0).ravel(), arg1.ravel(), (a2 > 0).ravel(), arg2.ravel(), (h > 0).ravel()])

    def _backward(self, dz, cache):
        x, c1, a1, arg1, m1, c2, a2, arg2, f, h = cache
        p = self.params
        g = {"fc2": dz.T @ h, "fc2_b": dz.sum(0)}
        dh = (dz @ p["fc2"]) * (h > 0)
        g["fc1"], g["fc1_b"] = dh.T @ f, dh.sum(0)
        df = dh @ p["fc1"]
        dm2 = df.reshape(arg2.shape)
        da2 = _maxpool2_backward(dm2, arg2, a2.shape) * (a2 > 0)
        flat2 = da2.reshape(-1, da2.shape[-1])
        g["conv2"] = flat2.T @ c2.reshape(len(flat2), -1)
        g["conv2_b"] = flat2.sum(0)
        dc2 = (flat2 @ p["conv2"]).reshape(c2.shape)
        dm1 = _col2im(dc2, m1.shape, 3)
        da1 = _maxpool2_backward(dm1, arg1, a1.shape) * (a1 > 0)
        flat1 = da1.reshape(-1, da1.shape[-1])
        g["conv1"] = flat1.T @ c1.reshape(len(flat1), -1)
        g["conv1_b"] = flat1.sum(0)
        return g

    def count_nonlinearities(self) -> int:
        """ReLU units of both conv stages and the dense layer, plus one softmax output per class."""
        (h1, w1), _, (h2, w2), _ = self._spatial()
        return h1 * w1 * self.channels[0] + h2 * w2 * self.channels[1] + self.hidden + self.n_classes

    def config(self) -> dict:
        return {"channels": list(self.channels), "hidden": self.hidden, "image_shape": list(self.image_shape),
                "classes": self.n_classes}


# --------------------------------------------------------------------------- counting

class NullModel(Model):
    """A model with no layers (used as the degenerate case of the counters)."""

    kind = "null"

    def count_nonlinearities(self) -> int:
        return 0

    def config(self) -> dict:
        return {}


def count_params(model: Model) -> int:
    return model.count_params()


def count_nonlinearities(model: Model) -> int:
    return model.count_nonlinearities()


def geo1_param_count(patterns: int, classes: int = N_CLASSES) -> int:
    return patterns * classes + classes


def geo2_param_count(patterns: int, hw: int = 784, classes: int = N_CLASSES) -> int:
    return patterns + 1 + hw * classes + classes


def mlp_param_count(sizes) -> int:
    return int(sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:])))


# --------------------------------------------------------------------------- gradient check

def gradient_check(model: Model, inputs, labels, rng: np.random.Generator, n_coords: int = 12,
                   step: float = 1e-4, max_tries: int = 20) -> float:
    """Relative error between analytic and central-difference gradients on random coordinates.

    Runs in float64.  For every parameter tensor, ``n_coords`` random entries
    are perturbed and ``|a - n| / max(|a|, |n|)`` (vector norms) is computed;
    the worst tensor is returned.  A coordinate whose +/- step changes the
    model's activation pattern straddles a kink, where the central difference
    is not a derivative, so it is redrawn (up to ``max_tries`` times).
    """
    m = model.astype(np.float64)
    _, grads = m.loss_and_grad(inputs, labels)
    base = m.activation_pattern(inputs)
    worst = 0.0
    for name, param in m.params.items():
        flat = param.reshape(-1)
        gflat = np.asarray(grads[name]).reshape(-1)
        k = min(n_coords, flat.size)
        idx, num = [], []
        for i in rng.permutation(flat.size)[: k * max_tries]:
            old = flat[i]
            flat[i] = old + step
            lp, pp = m.loss(inputs, labels), m.activation_pattern(inputs)
            flat[i] = old - step
            lm, pm = m.loss(inputs, labels), m.activation_pattern(inputs)
            flat[i] = old
            if base is not None and not (np.array_equal(pp, base) and np.array_equal(pm, base)):
                continue
            idx.append(i)
            num.append((lp - lm) / (2 * step))
            if len(idx) == k:
                break
        if not idx:
            continue
        ana = gflat[np.array(idx)]
        num = np.array(num)
        denom = max(np.linalg.norm(ana), np.linalg.norm(num), 1e-12)
        worst = max(worst, float(np.linalg.norm(ana - num) / denom))
    return worst
