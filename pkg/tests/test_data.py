import struct

import numpy as np
import pytest

from qvote import data
from qvote.data import (
    DataError,
    RawImage,
    build_subset,
    load_idx,
    load_split,
    preprocess,
    save_split,
    write_idx,
)


class TestLoadIdx:
    def test_loads_synthesized_corpus(self, raw_images):
        assert len(raw_images) == 1797
        assert raw_images[0].pixels.shape == (28, 28)
        assert all(0 <= img.label <= 9 for img in raw_images[:50])

    def test_bad_image_magic(self, tmp_path):
        images = tmp_path / "imgs"
        labels = tmp_path / "labs"
        images.write_bytes(struct.pack(">iiii", 2052, 1, 2, 2) + bytes(4))
        labels.write_bytes(struct.pack(">ii", 2049, 1) + bytes(1))
        with pytest.raises(DataError, match="magic"):
            load_idx(images, labels)

    def test_bad_label_magic(self, tmp_path):
        images = tmp_path / "imgs"
        labels = tmp_path / "labs"
        images.write_bytes(struct.pack(">iiii", 2051, 1, 2, 2) + bytes(4))
        labels.write_bytes(struct.pack(">ii", 1234, 1) + bytes(1))
        with pytest.raises(DataError, match="magic"):
            load_idx(images, labels)

    def test_count_mismatch(self, tmp_path):
        images = tmp_path / "imgs"
        labels = tmp_path / "labs"
        write_idx(np.zeros((12, 4, 4), dtype=np.uint8),
                  np.zeros(12, dtype=np.uint8), images, tmp_path / "l12")
        labels.write_bytes(struct.pack(">ii", 2049, 10) + bytes(10))
        with pytest.raises(DataError, match="count"):
            load_idx(images, labels)

    def test_truncated_images(self, tmp_path):
        images = tmp_path / "imgs"
        labels = tmp_path / "labs"
        images.write_bytes(struct.pack(">iiii", 2051, 2, 4, 4) + bytes(10))
        labels.write_bytes(struct.pack(">ii", 2049, 2) + bytes(2))
        with pytest.raises(DataError, match="truncated"):
            load_idx(images, labels)

    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        images = rng.integers(0, 256, size=(5, 28, 28), dtype=np.uint8)
        labels = np.array([1, 9, 4, 7, 1], dtype=np.uint8)
        write_idx(images, labels, tmp_path / "i", tmp_path / "l")
        loaded = load_idx(tmp_path / "i", tmp_path / "l")
        assert len(loaded) == 5
        np.testing.assert_array_equal(loaded[2].pixels, images[2])
        assert [img.label for img in loaded] == [1, 9, 4, 7, 1]


class TestPreprocess:
    def test_all_zero_image(self):
        img = RawImage(np.zeros((28, 28), dtype=np.uint8), 0)
        np.testing.assert_allclose(preprocess(img, 4), np.zeros(4))

    def test_all_max_image(self):
        img = RawImage(np.full((28, 28), 255, dtype=np.uint8), 0)
        np.testing.assert_allclose(preprocess(img, 4), np.ones(4))

    def test_left_right_halves(self):
        pixels = np.zeros((28, 28), dtype=np.uint8)
        pixels[:, :14] = 255
        features = preprocess(RawImage(pixels, 0), 2)
        np.testing.assert_allclose(features, [1.0, 0.0])

    def test_quadrants(self):
        pixels = np.zeros((28, 28), dtype=np.uint8)
        pixels[:14, :14] = 255  # top-left quadrant only
        np.testing.assert_allclose(preprocess(RawImage(pixels, 0), 4), [1, 0, 0, 0])

    def test_six_regions_widths(self):
        regions = data._pool_regions((28, 28), 6)
        widths = sorted({r[1].stop - r[1].start for r in regions}, reverse=True)
        assert widths == [10, 9]
        total = sum(
            (r[0].stop - r[0].start) * (r[1].stop - r[1].start) for r in regions
        )
        assert total == 28 * 28

    @pytest.mark.parametrize("d", [2, 4])
    def test_pool_conservation(self, d):
        rng = np.random.default_rng(1)
        pixels = rng.integers(0, 256, size=(28, 28), dtype=np.uint8)
        features = preprocess(RawImage(pixels, 0), d)
        assert features.mean() == pytest.approx(pixels.mean() / 255.0, abs=1e-9)

    def test_unsupported_d(self):
        with pytest.raises(DataError):
            preprocess(RawImage(np.zeros((28, 28), dtype=np.uint8), 0), 0)


class TestBuildSubset:
    def test_mnist2_split_shape(self, split_two):
        assert len(split_two.train) == 300
        assert len(split_two.test) == 30
        assert split_two.class_labels == (1, 9)

    def test_mnist4_split_shape(self, split_four):
        assert len(split_four.train) == 300
        assert len(split_four.test) == 30
        assert split_four.class_labels == (1, 4, 7, 9)

    def test_class_balance(self, split_two, split_four):
        for split in (split_two, split_four):
            labels = [y for _, y in split.train]
            per_class = [labels.count(c) for c in split.class_labels]
            want = len(labels) / len(split.class_labels)
            assert all(abs(c - want) <= 1 for c in per_class)

    def test_deterministic(self, raw_images):
        a = build_subset(raw_images, (1, 9), 40, 10, seed=3)
        b = build_subset(raw_images, (1, 9), 40, 10, seed=3)
        for (fa, ya), (fb, yb) in zip(a.train + a.test, b.train + b.test):
            np.testing.assert_array_equal(fa, fb)
            assert ya == yb

    def test_insufficient_images(self, raw_images):
        with pytest.raises(DataError, match="not enough"):
            build_subset(raw_images, (1, 9), 5000, 30, seed=0)

    def test_split_roundtrip_bit_exact(self, tmp_path, split_two):
        path = tmp_path / "split.json"
        save_split(split_two, path, seed=7)
        loaded = load_split(path)
        assert loaded.class_labels == split_two.class_labels
        for (fa, ya), (fb, yb) in zip(
            loaded.train + loaded.test, split_two.train + split_two.test
        ):
            np.testing.assert_array_equal(fa, fb)
            assert ya == yb
