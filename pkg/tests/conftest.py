import os
from pathlib import Path

import numpy as np
import pytest

from noisyiqa.image import Image

ROOT = Path(__file__).resolve().parent.parent
DATA = Path(__file__).resolve().parent / "data"
MODEL = ROOT / "models" / "brisque" / "allmodel"
RANGE = ROOT / "models" / "brisque" / "allrange"
TINY_MODEL = DATA / "tiny_model" / "model"
TINY_RANGE = DATA / "tiny_model" / "range"

# Real MNIST / CIFAR-10 files, when available, live under this directory.
REAL_DATA = os.environ.get("NOISYIQA_DATA_DIR")


def random_image(rng, h, w, c=1):
    return Image(rng.integers(0, 256, size=(h, w, c), dtype=np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def canonical_model():
    from noisyiqa.svr import load_range_file, load_svr_model

    return load_svr_model(MODEL), load_range_file(RANGE)
