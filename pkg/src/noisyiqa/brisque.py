"""BRISQUE: natural-scene-statistics features and the SVR quality score.

Per scale the feature vector holds the GGD fit of the MSCN coefficients
``[alpha, sigma^2]`` followed by an AGGD fit ``[alpha, eta, sigma_l^2,
sigma_r^2]`` of each neighbour product (horizontal, vertical, main diagonal,
anti-diagonal). The second scale is the 2x2 box-averaged luminance, giving 36
features in total. Higher scores mean worse quality.
"""
import csv
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.special import gammaln

from .errors import UnsupportedModelError
from .image import box_downsample2, to_plane
from .svr import scale_features, svr_predict

WINDOW_SIZE = 7
WINDOW_SIGMA = 7.0 / 6.0
STABILIZER = 1.0
DEGENERATE_POWER = 1e-10
MIN_SIZE = 14

ALPHA_GRID = np.round(np.arange(9801) * 0.001 + 0.2, 3)
# rho(a) = G(1/a) G(3/a) / G(2/a)^2, strictly decreasing in a
RHO_GRID = np.exp(gammaln(1.0 / ALPHA_GRID) + gammaln(3.0 / ALPHA_GRID) - 2.0 * gammaln(2.0 / ALPHA_GRID))

ORIENTATIONS = ("h", "v", "d1", "d2")
FEATURE_NAMES = tuple(
    name
    for scale in (1, 2)
    for name in (
        [f"s{scale}_ggd_alpha", f"s{scale}_ggd_sigma_sq"]
        + [f"s{scale}_{o}_{p}" for o in ORIENTATIONS for p in ("alpha", "eta", "sigma_l_sq", "sigma_r_sq")]
    )
)


def gaussian_window(size=WINDOW_SIZE, sigma=WINDOW_SIGMA):
    """Normalized ``size x size`` Gaussian weights."""
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r * r) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


_WINDOW = gaussian_window()


def mscn_map(plane):
    """Mean-subtracted, contrast-normalized coefficients of a luminance plane.

    Local mean and deviation use the 7x7 Gaussian window with symmetric
    (mirror) border extension.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2 or plane.shape[0] < 3 or plane.shape[1] < 3:
        raise ValueError(f"MSCN needs a 2-D plane of at least 3x3, got shape {plane.shape}")
    # MSCN ignores a global offset; removing it keeps constant planes exactly zero
    # and shrinks the cancellation in W[I^2] - mu^2
    plane = plane - plane.mean()
    mu = ndimage.correlate(plane, _WINDOW, mode="reflect")
    second = ndimage.correlate(plane * plane, _WINDOW, mode="reflect")
    sigma = np.sqrt(np.maximum(second - mu * mu, 0.0))
    return (plane - mu) / (sigma + STABILIZER)


def paired_products(m):
    """Products of each coefficient with its right, lower, lower-right and lower-left neighbour."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 2 or m.shape[1] < 2:
        raise ValueError(f"paired products need a plane of at least 2x2, got shape {m.shape}")
    h = m[:, :-1] * m[:, 1:]
    v = m[:-1, :] * m[1:, :]
    d1 = m[:-1, :-1] * m[1:, 1:]
    d2 = m[:-1, 1:] * m[1:, :-1]
    return h, v, d1, d2


def _invert_rho(target):
    return float(ALPHA_GRID[np.argmin(np.abs(RHO_GRID - target))])


@dataclass(frozen=True)
class GgdFit:
    alpha: float
    sigma_sq: float


@dataclass(frozen=True)
class AggdFit:
    alpha: float
    eta: float
    sigma_l_sq: float
    sigma_r_sq: float


def ggd_fit(samples):
    """Moment-matching fit of a zero-mean generalized Gaussian."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("ggd_fit needs at least one sample")
    power = float(np.mean(x * x))
    if power < DEGENERATE_POWER:
        return GgdFit(2.0, 0.0)
    abs_mean = float(np.mean(np.abs(x)))
    return GgdFit(_invert_rho(power / (abs_mean * abs_mean)), power)


def aggd_fit(samples):
    """Moment-matching fit of an asymmetric generalized Gaussian.

    Zeros count toward the overall moments but toward neither one-sided variance.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("aggd_fit needs at least one sample")
    power = float(np.mean(x * x))
    if power < DEGENERATE_POWER:
        return AggdFit(2.0, 0.0, 0.0, 0.0)
    neg, pos = x[x < 0], x[x > 0]
    left_sq = float(np.mean(neg * neg)) if neg.size else 0.0
    right_sq = float(np.mean(pos * pos)) if pos.size else 0.0
    left, right = np.sqrt(left_sq), np.sqrt(right_sq)

    abs_mean = float(np.mean(np.abs(x)))
    r_hat = abs_mean * abs_mean / power
    # (g^3 + 1)(g + 1) / (g^2 + 1)^2 with g = left / right, cleared of the division
    asym = (left**3 + right**3) * (left + right) / (left_sq + right_sq) ** 2
    alpha = _invert_rho(1.0 / (r_hat * asym))

    log_ratio = gammaln(2.0 / alpha) - gammaln(1.0 / alpha) + 0.5 * (gammaln(1.0 / alpha) - gammaln(3.0 / alpha))
    eta = (right - left) * float(np.exp(log_ratio))
    return AggdFit(alpha, eta, left_sq, right_sq)


def _scale_features(plane):
    m = mscn_map(plane)
    g = ggd_fit(m)
    feats = [g.alpha, g.sigma_sq]
    for product in paired_products(m):
        a = aggd_fit(product)
        feats.extend([a.alpha, a.eta, a.sigma_l_sq, a.sigma_r_sq])
    return feats


def extract_features(plane):
    """The 36 BRISQUE features of a luminance plane (see ``FEATURE_NAMES`` for the order)."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2 or plane.shape[0] < MIN_SIZE or plane.shape[1] < MIN_SIZE:
        raise ValueError(f"BRISQUE needs a plane of at least {MIN_SIZE}x{MIN_SIZE}, got shape {plane.shape}")
    return np.array(_scale_features(plane) + _scale_features(box_downsample2(plane)))


def image_features(img):
    return extract_features(to_plane(img))


def brisque_score(img, model, ranges):
    """Quality score in [0, 100] for an :class:`~noisyiqa.image.Image` (higher is worse)."""
    if model.n_features != len(FEATURE_NAMES) or len(ranges) != len(FEATURE_NAMES):
        raise UnsupportedModelError("model and range file must both be 36-dimensional")
    raw = svr_predict(scale_features(image_features(img), ranges), model)
    return min(max(raw, 0.0), 100.0)


def write_features_csv(rows, path):
    """Dump ``(image_id, condition, features)`` rows; columns follow ``FEATURE_NAMES``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_id", "condition", *FEATURE_NAMES])
        for image_id, condition, feats in rows:
            writer.writerow([image_id, condition, *(repr(float(f)) for f in feats)])
