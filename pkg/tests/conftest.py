import os

import numpy as np
import pytest

from tubalaug.data import CIFAR_MEANS, CIFAR_STDS
from tubalaug.harness import DATA_DIR_ENV


def make_cifar10_images(n, seed):
    """Synthetic 10-class uint8 images in the CIFAR pixel distribution.

    Class templates are low-frequency cosine patterns scaled so the
    channel statistics roughly match the real dataset's normalization
    constants; a CNN can separate the classes from a few hundred samples.
    """
    rng = np.random.default_rng(seed)
    i = np.arange(32)[:, None, None]
    j = np.arange(32)[None, :, None]
    labels = rng.integers(0, 10, size=n)
    templates = np.empty((10, 32, 32, 3))
    for k in range(10):
        f = k + 1
        templates[k] = (np.cos(2 * np.pi * f * i / 32)
                        * np.cos(2 * np.pi * f * j / 32))
    values = CIFAR_MEANS + CIFAR_STDS * (0.8 * templates[labels]
                                         + rng.normal(0, 0.4, (n, 32, 32, 3)))
    pixels = np.clip(values * 255.0, 0, 255).astype(np.uint8)
    return pixels, labels.astype(np.uint8)


def write_cifar10_dir(path, n_train=4000, n_test=1000, seed=1234):
    """Write synthetic data in the canonical CIFAR-10 binary batch layout."""
    os.makedirs(path, exist_ok=True)

    def write(fname, pixels, labels):
        planar = pixels.transpose(0, 3, 1, 2).reshape(len(labels), 3072)
        records = np.concatenate([labels[:, None], planar], axis=1)
        with open(os.path.join(path, fname), "wb") as fh:
            fh.write(records.astype(np.uint8).tobytes())

    pixels, labels = make_cifar10_images(n_train, seed)
    per = n_train // 5
    for b in range(5):
        sl = slice(b * per, (b + 1) * per)
        write(f"data_batch_{b + 1}.bin", pixels[sl], labels[sl])
    pixels, labels = make_cifar10_images(n_test, seed + 1)
    write("test_batch.bin", pixels, labels)
    return path


@pytest.fixture(scope="session")
def cifar_dir(tmp_path_factory):
    """Real CIFAR-10 binaries when $TUBALAUG_DATA_DIR has them, else a
    synthetic corpus in the identical binary format."""
    env_dir = os.environ.get(DATA_DIR_ENV, "")
    if env_dir and os.path.exists(os.path.join(env_dir, "data_batch_1.bin")):
        return env_dir
    path = tmp_path_factory.mktemp("cifar10-synth")
    return str(write_cifar10_dir(str(path)))


@pytest.fixture(scope="session")
def cifar_is_real(cifar_dir):
    env_dir = os.environ.get(DATA_DIR_ENV, "")
    return bool(env_dir) and cifar_dir == env_dir
