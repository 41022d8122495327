import gzip

import numpy as np
import pytest

from geneo_lab.data import (IMAGE_MAGIC, LABEL_MAGIC, IdxFormatError, downscale_2x2_max, load_mnist,
                            read_idx, stratified_split, stratified_subset, upsample_nearest, write_idx)


def write_pair(tmp_path, images, labels, gz=False):
    ip, lp = tmp_path / "img-idx3-ubyte", tmp_path / "lab-idx1-ubyte"
    write_idx(ip, np.asarray(images, np.uint8))
    write_idx(lp, np.asarray(labels, np.uint8))
    if gz:
        for p in (ip, lp):
            p.with_name(p.name + ".gz").write_bytes(gzip.compress(p.read_bytes()))
        return ip.with_name(ip.name + ".gz"), lp.with_name(lp.name + ".gz")
    return ip, lp


def test_all_zero_idx(tmp_path):
    ds = load_mnist(*write_pair(tmp_path, np.zeros((3, 28, 28)), [0, 1, 2]))
    assert len(ds) == 3 and ds.shape == (28, 28)
    assert ds.images.dtype == np.float32 and not ds.images.any()


@pytest.mark.parametrize("gz", [False, True])
def test_values_are_rescaled(tmp_path, gz):
    imgs = np.arange(2 * 4 * 4).reshape(2, 4, 4) * 7
    ds = load_mnist(*write_pair(tmp_path, imgs, [5, 9], gz))
    np.testing.assert_array_equal(ds.raw, imgs)
    np.testing.assert_allclose(ds.images, imgs / 255.0, rtol=1e-7)
    assert ds.images.max() <= 1.0 and ds.labels.tolist() == [5, 9]


def test_count_mismatch(tmp_path):
    with pytest.raises(IdxFormatError, match="mismatch"):
        load_mnist(*write_pair(tmp_path, np.zeros((3, 2, 2)), [0, 1]))


def test_bad_magic(tmp_path):
    ip, lp = write_pair(tmp_path, np.zeros((1, 2, 2)), [0])
    with pytest.raises(IdxFormatError):
        read_idx(lp, IMAGE_MAGIC)
    with pytest.raises(IdxFormatError):
        read_idx(ip, LABEL_MAGIC)


def test_truncated_payload(tmp_path):
    ip, _ = write_pair(tmp_path, np.zeros((2, 3, 3)), [0, 0])
    ip.write_bytes(ip.read_bytes()[:-4])
    with pytest.raises(IdxFormatError, match="truncated|payload"):
        read_idx(ip, IMAGE_MAGIC)


def test_real_mnist_counts(mnist):
    assert len(mnist) == 70_000 and mnist.shape == (28, 28)
    assert set(np.unique(mnist.labels)) == set(range(10))


# ----------------------------------------------------------------- splits

def test_split_exact_division():
    labels = np.repeat(np.arange(10), 100)
    sp = stratified_split(labels, 0)
    assert sp.sizes() == (600, 200, 200)
    for part, k in zip((sp.train, sp.val, sp.test), (60, 20, 20)):
        assert np.all(np.bincount(labels[part], minlength=10) == k)
    assert not set(sp.train) & set(sp.val) and not set(sp.val) & set(sp.test) and not set(sp.train) & set(sp.test)


def test_split_is_deterministic_per_seed():
    labels = np.random.default_rng(0).integers(0, 10, 2000)
    a, b, c = stratified_split(labels, 4), stratified_split(labels, 4), stratified_split(labels, 5)
    for x, y in zip((a.train, a.val, a.test), (b.train, b.val, b.test)):
        np.testing.assert_array_equal(x, y)
    assert not np.array_equal(a.train, c.train)
    for x, y in zip((a.train, a.val, a.test), (c.train, c.val, c.test)):
        np.testing.assert_array_equal(np.bincount(labels[x], minlength=10), np.bincount(labels[y], minlength=10))


def test_split_proportions_within_one():
    labels = np.random.default_rng(1).integers(0, 10, 1237)
    sp = stratified_split(labels, 0)
    for c in range(10):
        n = np.sum(labels == c)
        for part, f in zip((sp.train, sp.val, sp.test), (0.6, 0.2, 0.2)):
            assert abs(np.sum(labels[part] == c) - f * n) <= 1


def test_split_needs_ten_per_class():
    with pytest.raises(ValueError, match="class"):
        stratified_split(np.array([0] * 20 + [1] * 5), 0)


def test_subset_is_stratified_and_inside():
    labels = np.repeat(np.arange(10), 50)
    idx = np.arange(0, 500, 2)
    sub = stratified_subset(idx, labels, 100, 0)
    assert len(sub) == 100 and set(sub) <= set(idx)
    assert np.all(np.bincount(labels[sub], minlength=10) == 10)


# ----------------------------------------------------------------- rescaling

def test_downscale_constant_and_example():
    np.testing.assert_array_equal(downscale_2x2_max(np.full((4, 6), 0.3)), np.full((2, 3), 0.3))
    np.testing.assert_array_equal(downscale_2x2_max(np.array([[0, 1], [0, 0]])), [[1]])


def test_downscale_matches_block_loop():
    img = np.random.default_rng(2).random((28, 28))
    ref = np.array([[img[2 * i:2 * i + 2, 2 * j:2 * j + 2].max() for j in range(14)] for i in range(14)])
    np.testing.assert_array_equal(downscale_2x2_max(img), ref)


def test_downscale_odd_dims():
    with pytest.raises(ValueError):
        downscale_2x2_max(np.zeros((3, 4)))


def test_upsample_then_downscale_is_identity():
    img = np.random.default_rng(3).random((5, 7, 7))
    np.testing.assert_array_equal(downscale_2x2_max(upsample_nearest(img)), img)
