#!/usr/bin/env python
"""Regenerate the small dataset fixtures under ``tests/data``.

MNIST: the 5,000 real MNIST digits bundled with mlxtend (``mnist_5k.csv.gz``),
re-encoded into the standard IDX containers.

CIFAR-10 proxy: the real CIFAR-10 batches are not redistributable here, so a
stand-in batch is built from 32x32 area-resampled crops of the colour photos
shipped with scikit-image and scikit-learn, written in the CIFAR-10 binary
record layout. Point ``--data-dir`` at the real files to run on CIFAR-10.

    python scripts/build_fixtures.py --mnist-csv /path/to/mnist_5k.csv.gz
"""
import argparse
import gzip
import struct
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

HERE = Path(__file__).resolve().parent.parent / "tests" / "data"


def write_mnist(csv_path, out_dir):
    rows = np.loadtxt(gzip.open(csv_path, "rt"), delimiter=",", dtype=np.int64)
    pixels = rows[:, :784].astype(np.uint8)
    labels = rows[:, 784].astype(np.uint8)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = struct.pack(">IIII", 0x00000803, len(pixels), 28, 28)
    with gzip.GzipFile(out_dir / "train-images-idx3-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(header + pixels.tobytes())
    with gzip.GzipFile(out_dir / "train-labels-idx1-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(struct.pack(">II", 0x00000801, len(labels)) + labels.tobytes())
    return len(pixels)


def _photos():
    from skimage import data
    from sklearn.datasets import load_sample_images

    photos = [data.astronaut(), data.chelsea(), data.coffee(), data.rocket()]
    photos.extend(data.stereo_motorcycle()[:2])
    photos.extend(load_sample_images().images)
    return [np.asarray(p, dtype=np.uint8)[..., :3] for p in photos]


def write_cifar_proxy(out_dir, n_records=1000, seed=20221):
    rng = np.random.default_rng(seed)
    photos = _photos()
    records = bytearray()
    for k in range(n_records):
        label = k % len(photos) % 10
        photo = photos[k % len(photos)]
        h, w, _ = photo.shape
        # whole-object framing: CIFAR-10 images are downsampled full photos, not zoomed patches
        side = int(rng.integers(min(h, w) // 4, min(h, w) + 1))
        top = int(rng.integers(0, h - side + 1))
        left = int(rng.integers(0, w - side + 1))
        crop = PILImage.fromarray(photo[top:top + side, left:left + side])
        small = np.asarray(crop.resize((32, 32), PILImage.Resampling.BOX))
        records.append(label)
        records.extend(np.ascontiguousarray(small.transpose(2, 0, 1)).tobytes())
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "data_batch_1.bin").write_bytes(bytes(records))
    return n_records


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mnist-csv", type=Path, required=True)
    parser.add_argument("--out", type=Path, default=HERE)
    args = parser.parse_args()
    print("mnist images:", write_mnist(args.mnist_csv, args.out / "mnist"))
    print("cifar10 proxy records:", write_cifar_proxy(args.out / "cifar10"))


if __name__ == "__main__":
    main()
