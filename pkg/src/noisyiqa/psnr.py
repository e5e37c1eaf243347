"""Full-reference scoring: MSE and PSNR for 8-bit images."""
import math

import numpy as np

MAX_VALUE = 255.0


class _Undefined:
    """PSNR of an undistorted pair (MSE == 0). Serialized as ``NA``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEFINED"

    def __str__(self):
        return "NA"

    def __bool__(self):
        return False

    def __reduce__(self):
        return (_Undefined, ())


UNDEFINED = _Undefined()


def _check_pair(ref, dist):
    if ref.shape != dist.shape:
        raise ValueError(f"shape mismatch: reference {ref.shape} vs distorted {dist.shape}")


def mse(ref, dist):
    """Mean of squared differences over every scalar element (all channels pooled)."""
    _check_pair(ref, dist)
    diff = ref.pixels.astype(np.float64) - dist.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(ref, dist):
    """``10 log10(255^2 / MSE)`` in dB, or ``UNDEFINED`` when the images are identical."""
    err = mse(ref, dist)
    if err == 0:
        return UNDEFINED
    return 10.0 * math.log10(MAX_VALUE * MAX_VALUE / err)


def format_score(score):
    """CSV text for a score: 4 decimals, ``NA`` when undefined."""
    if score is UNDEFINED or score is None:
        return "NA"
    return f"{score:.4f}"
