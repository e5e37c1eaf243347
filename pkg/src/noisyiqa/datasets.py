"""MNIST / CIFAR-10 ingestion, seeded sampling, PNG persistence and manifests."""
import gzip
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import ConfigError, DataFormatError, IncompleteInputsError, LengthError
from .image import Image
from .rng import check_seed, keyed_generator

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CIFAR_RECORD = 1 + 3 * 32 * 32

DATASETS = {
    "mnist": (28, 28, 1),
    "cifar10": (32, 32, 3),
}


def check_dataset(name):
    if name not in DATASETS:
        raise ConfigError(f"unknown dataset {name!r}; expected one of {sorted(DATASETS)}")
    return name


def _read_magic(data, expected, what):
    if len(data) < 4:
        raise LengthError(f"{what}: {len(data)} bytes is shorter than the IDX magic")
    (magic,) = struct.unpack(">I", data[:4])
    if magic != expected:
        raise DataFormatError(f"{what}: bad IDX magic 0x{magic:08x}, expected 0x{expected:08x}")


def parse_idx(data):
    """Parse an IDX image container (magic 0x00000803) into grayscale images."""
    data = bytes(data)
    _read_magic(data, IDX_IMAGES_MAGIC, "idx images")
    if len(data) < 16:
        raise LengthError(f"idx images: truncated header ({len(data)} of 16 bytes)")
    n, rows, cols = struct.unpack(">III", data[4:16])
    expected = 16 + n * rows * cols
    if len(data) != expected:
        raise LengthError(f"idx images: header promises {expected} bytes, file has {len(data)}")
    if n and (rows < 1 or cols < 1):
        raise DataFormatError(f"idx images: invalid image size {rows}x{cols}")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=16).reshape(n, rows, cols)
    return [Image(p) for p in pixels]


def parse_idx_labels(data):
    data = bytes(data)
    _read_magic(data, IDX_LABELS_MAGIC, "idx labels")
    if len(data) < 8:
        raise LengthError("idx labels: truncated header")
    (n,) = struct.unpack(">I", data[4:8])
    if len(data) != 8 + n:
        raise LengthError(f"idx labels: header promises {8 + n} bytes, file has {len(data)}")
    return np.frombuffer(data, dtype=np.uint8, offset=8).astype(int).tolist()


def parse_cifar10_batch(data):
    """Parse CIFAR-10 binary records into ``(label, Image)`` pairs.

    Each 3073-byte record is one label byte followed by the planar R, G and B
    32x32 planes; pixels come back channel-interleaved.
    """
    data = bytes(data)
    if len(data) % CIFAR_RECORD:
        raise LengthError(f"cifar10 batch: {len(data)} bytes is not a multiple of {CIFAR_RECORD}")
    records = np.frombuffer(data, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    labels = records[:, 0]
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise DataFormatError(f"cifar10 batch: record {bad[0]} has label {labels[bad[0]]} > 9")
    planes = records[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    return [(int(lab), Image(px)) for lab, px in zip(labels, planes)]


def _read_maybe_gz(path):
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix == ".gz":
        try:
            return gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise DataFormatError(f"{path}: corrupt gzip stream ({exc})") from exc
    return raw


def _find(root, names):
    for name in names:
        for candidate in (root / name, root / (name + ".gz")):
            if candidate.is_file():
                return candidate
    return None


MNIST_SPLITS = [("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
                ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")]
CIFAR_BATCHES = [f"data_batch_{i}" for i in range(1, 6)] + ["test_batch"]


def dataset_dir(data_dir, dataset):
    """Directory under ``data_dir`` holding ``dataset``'s raw files."""
    data_dir = Path(data_dir)
    subdirs = {"mnist": ["mnist", "MNIST/raw", "."],
               "cifar10": ["cifar-10-batches-bin", "cifar10", "cifar-10", "."]}[dataset]
    for sub in subdirs:
        root = (data_dir / sub).resolve()
        if dataset == "mnist" and _find(root, [MNIST_SPLITS[0][0], MNIST_SPLITS[1][0]]):
            return root
        if dataset == "cifar10" and _find(root, [b + ".bin" for b in CIFAR_BATCHES] + CIFAR_BATCHES):
            return root
    raise IncompleteInputsError(f"no raw {dataset} files found under {data_dir}")


def raw_files(data_dir, dataset):
    """Raw files making up ``dataset``, in population order."""
    root = dataset_dir(data_dir, check_dataset(dataset))
    files = []
    if dataset == "mnist":
        for images, labels in MNIST_SPLITS:
            img_path = _find(root, [images])
            if img_path is None:
                continue
            lab_path = _find(root, [labels])
            files.append(img_path)
            if lab_path is not None:
                files.append(lab_path)
    else:
        for batch in CIFAR_BATCHES:
            path = _find(root, [batch + ".bin", batch])
            if path is not None:
                files.append(path)
    return files


def load_dataset(data_dir, dataset):
    """Load the full population of ``dataset`` as parallel ``(images, labels)`` lists.

    MNIST concatenates train then t10k; CIFAR-10 concatenates data_batch_1..5
    then test_batch, using whichever of those files are present.
    """
    files = raw_files(data_dir, dataset)
    images, labels = [], []
    if dataset == "mnist":
        for path in files:
            if "labels" in path.name:
                continue
            split_images = parse_idx(_read_maybe_gz(path))
            lab_path = next((f for f in files if f.name == path.name.replace("images-idx3", "labels-idx1")), None)
            split_labels = parse_idx_labels(_read_maybe_gz(lab_path)) if lab_path else [-1] * len(split_images)
            if len(split_labels) != len(split_images):
                raise LengthError(f"{lab_path}: {len(split_labels)} labels for {len(split_images)} images")
            images.extend(split_images)
            labels.extend(split_labels)
    else:
        for path in files:
            for label, img in parse_cifar10_batch(_read_maybe_gz(path)):
                labels.append(label)
                images.append(img)
    return images, labels


@dataclass
class ManifestEntry:
    image_id: int
    label: int
    file: str


@dataclass
class SampleManifest:
    dataset: str
    seed: int
    entries: list = field(default_factory=list)

    @property
    def image_ids(self):
        return [e.image_id for e in self.entries]

    def to_dict(self):
        return {
            "dataset": self.dataset,
            "seed": self.seed,
            "entries": [{"image_id": e.image_id, "label": e.label, "file": e.file} for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d):
        try:
            entries = [ManifestEntry(int(e["image_id"]), int(e["label"]), str(e["file"])) for e in d["entries"]]
            manifest = cls(str(d["dataset"]), int(d["seed"]), entries)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"malformed manifest: {exc}") from exc
        if len(set(manifest.image_ids)) != len(entries):
            raise DataFormatError("manifest has duplicate image ids")
        return manifest

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: manifest is not valid JSON ({exc})") from exc


def sample_indices(population, n, seed):
    """Draw ``n`` distinct indices from ``range(population)`` by partial Fisher-Yates."""
    seed = check_seed(seed)
    if n < 0:
        raise ValueError(f"sample size must be non-negative, got {n}")
    if n > population:
        raise ValueError(f"cannot draw {n} images from a population of {population}")
    rng = keyed_generator("sample", seed, population)
    perm = list(range(population)) if n else []
    for i in range(n):
        j = i + int(rng.integers(0, population - i))
        perm[i], perm[j] = perm[j], perm[i]
    return perm[:n]


def image_filename(dataset, image_id, condition=None):
    if condition is None:
        return f"{dataset}_{image_id}.png"
    return f"{dataset}_{image_id}_{condition}.png"


def sample_images(images, n, seed, labels=None, dataset="custom"):
    """Seeded draw without replacement; returns ``(manifest, sampled_images)``."""
    ids = sample_indices(len(images), n, seed)
    labels = labels if labels is not None else [-1] * len(images)
    entries = [ManifestEntry(i, int(labels[i]), image_filename(dataset, i)) for i in ids]
    return SampleManifest(dataset, check_seed(seed), entries), [images[i] for i in ids]


def write_image_png(img, path):
    mode = "L" if img.channels == 1 else "RGB"
    pixels = img.pixels[:, :, 0] if img.channels == 1 else img.pixels
    PILImage.fromarray(pixels, mode=mode).save(path, format="PNG")


def read_image_png(path):
    with open(path, "rb") as fh:
        head = fh.read(26)
    if head[:8] != b"\x89PNG\r\n\x1a\n" or head[12:16] != b"IHDR":
        raise DataFormatError(f"{path}: not a PNG file")
    bit_depth = head[24]
    if bit_depth != 8:
        raise DataFormatError(f"{path}: unsupported bit depth {bit_depth}; only 8-bit PNGs are read")
    with PILImage.open(path) as pil:
        if pil.mode not in ("L", "RGB"):
            raise DataFormatError(f"{path}: unsupported PNG mode {pil.mode}")
        return Image(np.asarray(pil))
