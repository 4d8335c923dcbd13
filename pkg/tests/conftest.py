"""Shared fixtures: real MNIST data served as standard IDX files.

Preference order:
  1. $MNIST_DIR containing the canonical train/t10k IDX files.
  2. The genuine 5000-digit MNIST subset bundled with mlxtend, split into
     held-out train/test portions and written out as IDX files so the whole
     parsing pipeline is exercised.
Data-dependent tests skip when neither source is available.
"""

import os
from pathlib import Path

import numpy as np
import pytest

from routewave.signals import parse_idx, standard_mnist_paths, write_idx

TRAIN_PER_CLASS = 300
TEST_PER_CLASS = 200


def _from_mlxtend(data_dir: Path) -> dict:
    from mlxtend.data import mnist_data

    X, y = mnist_data()
    X = X.reshape(-1, 28, 28).astype(np.uint8)
    y = y.astype(np.uint8)
    train_x, train_y, test_x, test_y = [], [], [], []
    for label in range(10):
        idx = np.where(y == label)[0]
        cut = min(TRAIN_PER_CLASS, len(idx) - TEST_PER_CLASS)
        train_x.append(X[idx[:cut]])
        train_y.append(y[idx[:cut]])
        test_x.append(X[idx[cut:cut + TEST_PER_CLASS]])
        test_y.append(y[idx[cut:cut + TEST_PER_CLASS]])
    paths = {
        "train_images": data_dir / "train-images-idx3-ubyte",
        "train_labels": data_dir / "train-labels-idx1-ubyte",
        "test_images": data_dir / "t10k-images-idx3-ubyte",
        "test_labels": data_dir / "t10k-labels-idx1-ubyte",
    }
    write_idx(np.concatenate(train_x), np.concatenate(train_y),
              paths["train_images"], paths["train_labels"])
    write_idx(np.concatenate(test_x), np.concatenate(test_y),
              paths["test_images"], paths["test_labels"])
    return paths


@pytest.fixture(scope="session")
def mnist_paths(tmp_path_factory) -> dict:
    env_dir = os.environ.get("MNIST_DIR")
    if env_dir:
        return standard_mnist_paths(env_dir)
    try:
        import mlxtend  # noqa: F401
    except ImportError:
        pytest.skip("no MNIST_DIR and mlxtend unavailable; cannot obtain MNIST")
    data_dir = tmp_path_factory.mktemp("mnist_idx")
    return _from_mlxtend(data_dir)


@pytest.fixture(scope="session")
def mnist_train(mnist_paths):
    imgs = parse_idx(mnist_paths["train_images"], mnist_paths["train_labels"])
    return [img for img in imgs if img.label in (0, 1, 2, 4)]


@pytest.fixture(scope="session")
def mnist_test(mnist_paths):
    imgs = parse_idx(mnist_paths["test_images"], mnist_paths["test_labels"])
    return [img for img in imgs if img.label in (0, 1, 2, 4)]
