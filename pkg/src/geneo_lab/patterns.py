"""Pattern banks and pattern-matching features on the torus.

The activation of pattern ``p`` (``H × W``, centred) on image ``x`` at ``(n, m)`` is

    1 - sum_{i,j} |x((n, m) + (i, j)) - p(i, j)| / (W * H)

with indices taken modulo the image size.  For images stored as bytes the sum
is computed exactly in integers on the 0..255 levels, so features do not depend
on summation order or thread count.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp
from numba import njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "workqueue"


# --------------------------------------------------------------------------- bank

@dataclass(frozen=True)
class PatternBank:
    """Patches cut from training images.

    ``centers[k] = (row, col)`` of the crop in image ``sources[k]``;
    ``levels`` holds byte levels when the source images were bytes.
    """

    patterns: np.ndarray          # (P, H, W) float64 in [0, 1]
    sources: np.ndarray           # (P,) source image index (into the array sampled from)
    centers: np.ndarray           # (P, 2) row, col
    seed: int
    levels: np.ndarray | None = None   # (P, H, W) uint8

    @property
    def count(self) -> int:
        return len(self.patterns)

    @property
    def height(self) -> int:
        return self.patterns.shape[1]

    @property
    def width(self) -> int:
        return self.patterns.shape[2]

    def subset(self, k: int) -> "PatternBank":
        lv = None if self.levels is None else self.levels[:k]
        return PatternBank(self.patterns[:k], self.sources[:k], self.centers[:k], self.seed, lv)


def torus_crop(img: np.ndarray, center, H: int, W: int) -> np.ndarray:
    """``H × W`` window centred at ``center = (row, col)`` with wrap-around."""
    h, w = img.shape
    rows = (center[0] - H // 2 + np.arange(H)) % h
    cols = (center[1] - W // 2 + np.arange(W)) % w
    return img[np.ix_(rows, cols)]


def sample_center(img: np.ndarray, rng: np.random.Generator) -> tuple[int, int]:
    """Pixel drawn with probability proportional to its intensity."""
    weights = np.asarray(img, dtype=np.float64).ravel()
    total = weights.sum()
    if total <= 0:
        raise ValueError("image has no intensity")
    k = int(rng.choice(weights.size, p=weights / total))
    return divmod(k, img.shape[1])


def sample_patterns(train, count: int, W: int = 9, H: int = 9, seed: int = 0,
                    max_tries: int = 1000) -> PatternBank:
    """Draw ``count`` patches: image uniform over ``train``, centre proportional to intensity."""
    if count < 1:
        raise ValueError("pattern count must be at least 1")
    if W % 2 == 0 or H % 2 == 0:
        raise ValueError("pattern sides must be odd")
    train = np.asarray(train)
    rng = np.random.default_rng(seed)
    pats, srcs, cents = [], [], []
    for _ in range(count):
        for _try in range(max_tries):
            j = int(rng.integers(len(train)))
            if train[j].any():
                break
        else:
            raise ValueError("could not find an image with nonzero intensity")
        c = sample_center(train[j], rng)
        pats.append(torus_crop(train[j], c, H, W))
        srcs.append(j)
        cents.append(c)
    pats = np.stack(pats)
    if pats.dtype == np.uint8:
        return PatternBank(pats.astype(np.float64) / 255.0, np.array(srcs), np.array(cents), seed, pats)
    return PatternBank(pats.astype(np.float64), np.array(srcs), np.array(cents), seed)


# --------------------------------------------------------------------------- reference maps

def pattern_activation_map(image: np.ndarray, pattern: np.ndarray) -> np.ndarray:
    """Activation of one pattern at every torus offset (direct formula)."""
    x = np.asarray(image, dtype=np.float64)
    p = np.asarray(pattern, dtype=np.float64)
    H, W = p.shape
    if H > x.shape[0] or W > x.shape[1]:
        raise ValueError("pattern larger than image")
    gap = np.zeros_like(x)
    for i in range(H):
        for j in range(W):
            gap += np.abs(np.roll(x, (-(i - H // 2), -(j - W // 2)), axis=(0, 1)) - p[i, j])
    return 1.0 - gap / (W * H)


def image_wide_maxpool(amap: np.ndarray) -> float:
    amap = np.asarray(amap)
    if amap.size == 0:
        raise ValueError("empty map")
    return float(amap.max())


def channel_wise_max(amap: np.ndarray) -> np.ndarray:
    """Keep entries equal to the global max (all ties), zero elsewhere."""
    amap = np.asarray(amap)
    if amap.size == 0:
        raise ValueError("empty map")
    return np.where(amap == amap.max(), amap, 0)


# --------------------------------------------------------------------------- kernels

@njit(cache=True)
def _distance_maps(x, q2, psum, nz_r, nz_c, nnz, pad, out):
    """L1 window distance of every pattern at every torus offset, ``out[n, m, p]``.

    ``q2[i, j, p]`` is twice pattern ``p`` flipped in both axes.  Zero pixels
    add ``|0 - q| - q = 0`` on top of the pattern mass ``psum``, so only
    nonzero pixels are scattered, using ``|v - q| - q = max(v - 2q, -v)``.
    """
    h, w, P = out.shape
    H, W = q2.shape[0], q2.shape[1]
    pad[:, :, :] = 0
    for k in range(nnz):
        a = nz_r[k]
        b = nz_c[k]
        v = x[a, b]
        for i in range(H):
            for j in range(W):
                cell = pad[a + i, b + j]
                qq = q2[i, j]
                for p in range(P):
                    c = v - qq[p]
                    if c < -v:
                        c = -v
                    cell[p] += c
    # pad row r holds window row (r + H//2 - H + 1) mod h, likewise for columns
    ro = H // 2 - H + 1
    co = W // 2 - W + 1
    for n in range(h):
        for m in range(w):
            out[n, m, :] = psum
    for r in range(pad.shape[0]):
        n = (r + ro) % h
        for s in range(pad.shape[1]):
            m = (s + co) % w
            cell = pad[r, s]
            dst = out[n, m]
            for p in range(P):
                dst[p] += cell[p]


@njit(cache=True)
def _nonzero(x, nz_r, nz_c):
    h, w = x.shape
    nnz = 0
    for a in range(h):
        for b in range(w):
            if x[a, b] != 0:
                nz_r[nnz] = a
                nz_c[nnz] = b
                nnz += 1
    return nnz


@njit(parallel=True, cache=True)
def _min_distance_kernel(xs, q2, psum, dmin, nties):
    N, h, w = xs.shape
    H, W, P = q2.shape
    for n in prange(N):
        nz_r = np.empty(h * w, np.int64)
        nz_c = np.empty(h * w, np.int64)
        nnz = _nonzero(xs[n], nz_r, nz_c)
        pad = np.empty((h + H - 1, w + W - 1, P), q2.dtype)
        out = np.empty((h, w, P), q2.dtype)
        _distance_maps(xs[n], q2, psum, nz_r, nz_c, nnz, pad, out)
        best = out[0, 0].copy()
        cnt = np.zeros(P, np.int64)
        for a in range(h):
            for b in range(w):
                row = out[a, b]
                for p in range(P):
                    v = row[p]
                    if v < best[p]:
                        best[p] = v
                        cnt[p] = 1
                    elif v == best[p]:
                        cnt[p] += 1
        dmin[n] = best
        nties[n] = cnt


@njit(parallel=True, cache=True)
def _argmin_positions_kernel(xs, q2, psum, dmin, offsets, positions):
    N, h, w = xs.shape
    H, W, P = q2.shape
    for n in prange(N):
        nz_r = np.empty(h * w, np.int64)
        nz_c = np.empty(h * w, np.int64)
        nnz = _nonzero(xs[n], nz_r, nz_c)
        pad = np.empty((h + H - 1, w + W - 1, P), q2.dtype)
        out = np.empty((h, w, P), q2.dtype)
        _distance_maps(xs[n], q2, psum, nz_r, nz_c, nnz, pad, out)
        for p in range(P):
            k = offsets[n * P + p]
            best = dmin[n, p]
            for a in range(h):
                for b in range(w):
                    if out[a, b, p] == best:
                        positions[k] = a * w + b
                        k += 1


def _kernel_patterns(pats: np.ndarray):
    """Doubled, flipped patterns laid out ``(H, W, P)`` plus the per-pattern mass."""
    q2 = np.ascontiguousarray(np.transpose(2 * pats[:, ::-1, ::-1], (1, 2, 0)))
    psum = np.ascontiguousarray(pats.sum(axis=(1, 2)))
    return q2, psum


# --------------------------------------------------------------------------- features

@dataclass
class Features:
    """Per-image pattern features.

    ``maxpool[j, i]`` is the image-wide max of pattern ``i`` on image ``j``;
    ``cwm`` (optional) is a CSR matrix with rows ``j * h * w + position`` and
    one column per pattern, holding the max activation at every tied argmax.
    """

    maxpool: np.ndarray
    cwm: sp.csr_matrix | None = None
    image_shape: tuple = (28, 28)

    def rows(self, idx) -> "Features":
        idx = np.asarray(idx)
        cwm = None
        if self.cwm is not None:
            hw = self.image_shape[0] * self.image_shape[1]
            r = (idx[:, None] * hw + np.arange(hw)[None, :]).ravel()
            cwm = self.cwm[r]
        return Features(self.maxpool[idx], cwm, self.image_shape)

    def __len__(self):
        return len(self.maxpool)


def _quantized_levels(images: np.ndarray) -> np.ndarray | None:
    """Byte levels if ``images`` are exactly ``levels / 255`` (as float32 or float64), else None."""
    if images.dtype == np.uint8:
        return images
    if images.dtype not in (np.float32, np.float64):
        return None
    lv = np.rint(images.astype(np.float64) * 255.0)
    if lv.min(initial=0) < 0 or lv.max(initial=0) > 255:
        return None
    lv = lv.astype(np.uint8)
    if np.array_equal(lv.astype(images.dtype) / images.dtype.type(255), images):
        return lv
    return None


def set_threads(threads: int | None):
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def extract_features(images, bank: PatternBank, with_cwm: bool = False, threads: int | None = None,
                     chunk: int = 4096) -> Features:
    """Image-wide-maxpool features (and optionally channel-wise-max maps) for a stack of images."""
    if bank.count < 1:
        raise ValueError("empty pattern bank")
    images = np.asarray(images)
    if images.ndim == 2:
        images = images[None]
    set_threads(threads)
    levels = _quantized_levels(images)
    H, W = bank.height, bank.width
    if levels is not None and bank.levels is not None:
        xs = levels.astype(np.int32)
        pats = bank.levels.astype(np.int32)
        scale = 255.0 * W * H
    else:
        xs = images.astype(np.float64)
        pats = bank.patterns.astype(np.float64)
        scale = float(W * H)
    N, h, w = xs.shape
    P = bank.count
    dmin = np.empty((N, P), pats.dtype)
    nties = np.empty((N, P), np.int64)
    q2, psum = _kernel_patterns(pats)
    for s in range(0, N, chunk):
        _min_distance_kernel(xs[s:s + chunk], q2, psum, dmin[s:s + chunk], nties[s:s + chunk])
    maxpool = 1.0 - dmin.astype(np.float64) / scale
    cwm = None
    if with_cwm:
        offsets = np.zeros(N * P + 1, np.int64)
        np.cumsum(nties.ravel(), out=offsets[1:])
        positions = np.empty(offsets[-1], np.int64)
        for s in range(0, N, chunk):
            e = min(N, s + chunk)
            local = offsets[s * P:e * P + 1] - offsets[s * P]
            _argmin_positions_kernel(xs[s:e], q2, psum, dmin[s:e], local,
                                     positions[offsets[s * P]:offsets[e * P]])
        counts = nties.ravel()
        img = np.repeat(np.arange(N), P)
        pat = np.tile(np.arange(P), N)
        rows = np.repeat(img, counts) * (h * w) + positions
        cols = np.repeat(pat, counts)
        vals = np.repeat(maxpool.ravel(), counts)
        cwm = sp.csr_matrix((vals, (rows, cols)), shape=(N * h * w, P))
        cwm.sort_indices()
    return Features(maxpool, cwm, (h, w))


def naive_features(images, patterns) -> np.ndarray:
    """Unbatched reference: image-wide max of :func:`pattern_activation_map` per pair."""
    return np.array([[image_wide_maxpool(pattern_activation_map(x, p)) for p in patterns] for x in images])


def default_threads() -> int:
    return int(os.environ.get("NUMBA_NUM_THREADS", numba.config.NUMBA_NUM_THREADS))
