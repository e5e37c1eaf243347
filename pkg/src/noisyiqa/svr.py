"""libSVM-format RBF support-vector regression and svm-scale range files.

Model grammar (one item per line)::

    svm_type epsilon_svr          # or nu_svr
    kernel_type rbf
    gamma <float>
    total_sv <int>
    rho <float>
    ...other header keys are kept verbatim...
    SV
    <coef> <index>:<value> <index>:<value> ...

Sparse indices are 1-based in the file and 0-based in memory; an absent index
means the feature value is 0.

Range grammar::

    x
    <lower> <upper>
    <index> <min> <max>           # one line per feature
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, UnsupportedModelError

N_FEATURES = 36
REGRESSION_TYPES = ("epsilon_svr", "nu_svr")


class IncompleteRangeError(DataFormatError):
    pass


@dataclass
class SvrModel:
    gamma: float
    rho: float
    coefs: np.ndarray
    support_vectors: np.ndarray
    svm_type: str = "epsilon_svr"
    header: dict = field(default_factory=dict)

    @property
    def total_sv(self):
        return len(self.coefs)

    @property
    def n_features(self):
        return self.support_vectors.shape[1]


def _fmt(value):
    return repr(float(value))


def parse_svr_model(text, n_features=N_FEATURES):
    lines = text.splitlines()
    header = {}
    body_start = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if line == "SV":
            body_start = lineno
            break
        key, _, value = line.partition(" ")
        header[key] = value.strip()
    if body_start is None:
        raise DataFormatError("model has no 'SV' section")

    svm_type = header.get("svm_type")
    if svm_type not in REGRESSION_TYPES:
        raise UnsupportedModelError(f"svm_type {svm_type!r} is not a regression model")
    if header.get("kernel_type") != "rbf":
        raise UnsupportedModelError(f"kernel_type {header.get('kernel_type')!r} is not rbf")
    try:
        gamma = float(header["gamma"])
        rho = float(header["rho"])
        total_sv = int(header["total_sv"])
    except KeyError as exc:
        raise DataFormatError(f"model header lacks {exc.args[0]!r}") from None
    except ValueError as exc:
        raise DataFormatError(f"model header: {exc}") from None
    if not gamma > 0:
        raise DataFormatError(f"gamma must be positive, got {gamma}")

    coefs, vectors = [], []
    for lineno, raw in enumerate(lines[body_start:], body_start + 1):
        parts = raw.split()
        if not parts:
            continue
        vec = np.zeros(n_features)
        try:
            coefs.append(float(parts[0]))
            for item in parts[1:]:
                idx, _, val = item.partition(":")
                idx = int(idx)
                if not 1 <= idx <= n_features:
                    raise DataFormatError(f"line {lineno}: feature index {idx} outside 1..{n_features}")
                vec[idx - 1] = float(val)
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: malformed support vector ({exc})") from None
        vectors.append(vec)
    if not coefs:
        raise DataFormatError("model has no support vectors")
    if len(coefs) != total_sv:
        raise DataFormatError(f"header declares total_sv {total_sv} but {len(coefs)} vectors follow")

    rest = {k: v for k, v in header.items() if k not in ("svm_type", "kernel_type", "gamma", "rho", "total_sv")}
    return SvrModel(gamma, rho, np.array(coefs), np.vstack(vectors), svm_type, rest)


def format_svr_model(model):
    lines = [f"svm_type {model.svm_type}", "kernel_type rbf", f"gamma {_fmt(model.gamma)}"]
    extra = dict(model.header)
    if "nr_class" in extra:
        lines.append(f"nr_class {extra.pop('nr_class')}")
    lines.append(f"total_sv {model.total_sv}")
    lines.append(f"rho {_fmt(model.rho)}")
    lines.extend(f"{k} {v}" for k, v in extra.items())
    lines.append("SV")
    for coef, vec in zip(model.coefs, model.support_vectors):
        items = " ".join(f"{i + 1}:{_fmt(v)}" for i, v in enumerate(vec) if v != 0)
        lines.append(f"{_fmt(coef)} {items}".rstrip())
    return "\n".join(lines) + "\n"


def load_svr_model(path, n_features=N_FEATURES):
    with open(path) as fh:
        return parse_svr_model(fh.read(), n_features)


@dataclass
class FeatureRange:
    lower: float
    upper: float
    mins: np.ndarray
    maxs: np.ndarray

    def __len__(self):
        return len(self.mins)


def parse_range_file(text, n_features=N_FEATURES):
    rows = [(n, line.split()) for n, line in enumerate(text.splitlines(), 1) if line.strip()]
    if rows and rows[0][1] == ["x"]:
        rows = rows[1:]
    if not rows:
        raise DataFormatError("range file is empty")
    try:
        lower, upper = (float(v) for v in rows[0][1])
    except ValueError:
        raise DataFormatError(f"line {rows[0][0]}: expected '<lower> <upper>'") from None
    bounds = {}
    for lineno, parts in rows[1:]:
        if len(parts) != 3:
            raise DataFormatError(f"line {lineno}: expected '<index> <min> <max>'")
        try:
            idx, lo, hi = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError:
            raise DataFormatError(f"line {lineno}: malformed range row") from None
        if not 1 <= idx <= n_features:
            raise DataFormatError(f"line {lineno}: feature index {idx} outside 1..{n_features}")
        if lo > hi:
            raise DataFormatError(f"line {lineno}: min {lo} exceeds max {hi}")
        bounds[idx] = (lo, hi)
    missing = [i for i in range(1, n_features + 1) if i not in bounds]
    if missing:
        raise IncompleteRangeError(f"range file lacks feature indices {missing}")
    mins = np.array([bounds[i][0] for i in range(1, n_features + 1)])
    maxs = np.array([bounds[i][1] for i in range(1, n_features + 1)])
    return FeatureRange(lower, upper, mins, maxs)


def format_range_file(ranges):
    lines = ["x", f"{ranges.lower:g} {ranges.upper:g}"]
    lines.extend(f"{i} {_fmt(lo)} {_fmt(hi)}" for i, (lo, hi) in enumerate(zip(ranges.mins, ranges.maxs), 1))
    return "\n".join(lines) + "\n"


def load_range_file(path, n_features=N_FEATURES):
    with open(path) as fh:
        return parse_range_file(fh.read(), n_features)


def scale_features(features, ranges):
    """Map each feature linearly so [min, max] lands on [lower, upper]; no clamping."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape[-1] != len(ranges):
        raise ValueError(f"feature vector has {x.shape[-1]} entries, range file has {len(ranges)}")
    span = ranges.maxs - ranges.mins
    safe = np.where(span == 0, 1.0, span)
    scaled = ranges.lower + (ranges.upper - ranges.lower) * (x - ranges.mins) / safe
    return np.where(span == 0, 0.0, scaled)


def svr_predict(x, model):
    """``sum_i coef_i * exp(-gamma * |sv_i - x|^2) - rho``.

    The sum is exactly rounded (``math.fsum``), so the result does not depend
    on the order of support vectors in the file.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(f"expected a {model.n_features}-vector, got shape {x.shape}")
    diff = model.support_vectors - x
    kernel = np.exp(-model.gamma * np.einsum("ij,ij->i", diff, diff))
    return math.fsum(model.coefs * kernel) - model.rho
