"""Shared fixtures.

Real MNIST files are not distributable with the repository, so the
dataset fixtures synthesize IDX files in the exact MNIST binary layout
from scikit-learn's bundled digit images, upscaled to 28x28. The full
ingestion path (IDX parsing, subset building, pooling) is exercised
against these files.
"""

import numpy as np
import pytest
from sklearn.datasets import load_digits

from qvote import data

# 8 -> 28 upscale: repeat rows/cols by alternating factors 4 and 3.
_UPSCALE_COUNTS = np.array([4, 3, 4, 3, 4, 3, 4, 3])


def _digits_as_mnist() -> tuple[np.ndarray, np.ndarray]:
    bundle = load_digits()
    images = []
    for img in bundle.images:
        big = np.repeat(np.repeat(img, _UPSCALE_COUNTS, axis=0),
                        _UPSCALE_COUNTS, axis=1)
        images.append(np.clip(big * 255.0 / 16.0, 0, 255).astype(np.uint8))
    return np.stack(images), bundle.target.astype(np.uint8)


@pytest.fixture(scope="session")
def idx_files(tmp_path_factory):
    """Paths of a synthesized MNIST-format (images, labels) IDX pair."""
    root = tmp_path_factory.mktemp("idx")
    images, labels = _digits_as_mnist()
    images_path = root / "train-images-idx3-ubyte"
    labels_path = root / "train-labels-idx1-ubyte"
    data.write_idx(images, labels, images_path, labels_path)
    return images_path, labels_path


@pytest.fixture(scope="session")
def raw_images(idx_files):
    return data.load_idx(*idx_files)


@pytest.fixture(scope="session")
def split_two(raw_images):
    """Digits {1, 9}, 300 train / 30 test, 4 features."""
    return data.build_subset(raw_images, (1, 9), 300, 30, seed=7, n_features=4)


@pytest.fixture(scope="session")
def split_four(raw_images):
    """Digits {1, 4, 7, 9}, 300 train / 30 test, 4 features."""
    return data.build_subset(raw_images, (1, 4, 7, 9), 300, 30, seed=7, n_features=4)
