"""Salt-and-pepper, Gaussian and rotation perturbations, their ordered
composition, and the 69-condition registry.

Condition names follow a small grammar: ``clean`` or one/two tokens from
``SP<v>``, ``GA<v>``, ``RR<deg>`` (clockwise), ``RL<deg>`` (counterclockwise)
and ``RO0``. Steps run left to right, so ``SP0.1GA0.2`` is salt-and-pepper
first, then Gaussian noise.
"""
import math
import re
from dataclasses import dataclass

import numpy as np

from .image import Image
from .rng import check_seed, keyed_generator

GAUSS_MODES = ("variance", "stddev")

REGISTRY_NAMES = (
    "clean", "SP0GA0.1", "SP0GA0.15", "SP0GA0.2", "SP0.1GA0", "SP0.1GA0.1", "SP0.1GA0.15",
    "SP0.1GA0.2", "SP0.15GA0", "SP0.15GA0.1", "SP0.15GA0.15", "SP0.15GA0.2", "SP0.2GA0",
    "SP0.2GA0.1", "SP0.2GA0.15", "SP0.2GA0.2", "GA0SP0.1", "GA0SP0.15", "GA0SP0.2",
    "GA0.15SP0", "GA0.15SP0.1", "GA0.15SP0.15", "GA0.15SP0.2", "GA0.1SP0", "GA0.1SP0.1",
    "GA0.1SP0.15", "GA0.1SP0.2", "GA0.2SP0", "GA0.2SP0.1", "GA0.2SP0.15", "GA0.2SP0.2",
    "SP0RR30", "SP0RR60", "SP0.1RR30", "SP0.1RR60", "SP0.15RR30", "SP0.15RR60", "SP0.2RR30",
    "SP0.2RR60", "SP0RL30", "SP0RL60", "SP0.1RO0", "SP0.1RL30", "SP0.1RL60", "SP0.15RO0",
    "SP0.15RL30", "SP0.15RL60", "SP0.2RO0", "SP0.2RL30", "SP0.2RL60", "RR30SP0.1",
    "RR30SP0.15", "RR30SP0.2", "RR30SP0", "RR60SP0.1", "RR60SP0.15", "RR60SP0.2", "RR60SP0",
    "RO0SP0.1", "RO0SP0.15", "RO0SP0.2", "RL30SP0", "RL30SP0.1", "RL30SP0.15", "RL30SP0.2",
    "RL60SP0", "RL60SP0.1", "RL60SP0.15", "RL60SP0.2",
)


class ConditionParseError(ValueError):
    def __init__(self, name, position, reason):
        self.name = name
        self.position = position
        super().__init__(f"cannot parse condition {name!r} at position {position}: {reason}")


def _fmt_number(value):
    value = float(value)
    if value == int(value):
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class Step:
    """One perturbation: ``SP`` (amount), ``GA`` (noise index) or ``ROT`` (degrees, + = clockwise)."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("SP", "GA", "ROT"):
            raise ValueError(f"unknown step kind {self.kind!r}")
        value = float(self.value)
        if not math.isfinite(value):
            raise ValueError(f"{self.kind} parameter must be finite")
        if self.kind == "SP" and not 0.0 <= value <= 1.0:
            raise ValueError(f"salt-and-pepper amount must be in [0, 1], got {value}")
        if self.kind == "GA" and value < 0:
            raise ValueError(f"Gaussian strength must be non-negative, got {value}")
        object.__setattr__(self, "value", value)

    @property
    def is_identity(self):
        return self.value == 0.0

    @property
    def token(self):
        if self.kind != "ROT":
            return f"{self.kind}{_fmt_number(self.value)}"
        if self.value == 0:
            return "RO0"
        direction = "RR" if self.value > 0 else "RL"
        return f"{direction}{_fmt_number(abs(self.value))}"


@dataclass(frozen=True)
class Condition:
    name: str
    steps: tuple

    def __str__(self):
        return self.name


def format_condition(steps):
    steps = tuple(steps)
    return "clean" if not steps else "".join(s.token for s in steps)


_TOKEN = re.compile(r"(SP|GA|RR|RL|RO)(\d+(?:\.\d+)?)")


def parse_condition(name):
    if not isinstance(name, str):
        raise TypeError("condition name must be a string")
    if name == "clean":
        return Condition("clean", ())
    steps = []
    pos = 0
    while pos < len(name):
        m = _TOKEN.match(name, pos)
        if m is None:
            raise ConditionParseError(name, pos, "expected SP<v>, GA<v>, RR<deg>, RL<deg> or RO0")
        kind, number = m.group(1), float(m.group(2))
        if kind == "RO" and number != 0:
            raise ConditionParseError(name, pos + 2, "RO only takes 0; use RR/RL for nonzero angles")
        try:
            if kind in ("SP", "GA"):
                steps.append(Step(kind, number))
            else:
                steps.append(Step("ROT", -number if kind == "RL" else number))
        except ValueError as exc:
            raise ConditionParseError(name, pos, str(exc)) from None
        pos = m.end()
    if not steps:
        raise ConditionParseError(name, 0, "empty condition")
    if len(steps) > 2:
        raise ConditionParseError(name, 0, f"at most two steps allowed, got {len(steps)}")
    return Condition(format_condition(steps), tuple(steps))


def build_registry():
    """The 69 benchmark conditions, in table order (index 0 is ``clean``)."""
    return [parse_condition(n) for n in REGISTRY_NAMES]


def _requantize(values):
    # values are clipped to [0, 255] first, so floor(v + 0.5) rounds halves away from zero
    return np.floor(np.clip(values, 0.0, 255.0) + 0.5).astype(np.uint8)


def apply_salt_pepper(img, amount, rng):
    """Replace each scalar element with probability ``amount``; replacements are 0 or 255 evenly."""
    if not 0.0 <= amount <= 1.0:
        raise ValueError(f"salt-and-pepper amount must be in [0, 1], got {amount}")
    if amount == 0:
        return img
    shape = img.pixels.shape
    replaced = rng.random(shape) < amount
    salt = rng.random(shape) < 0.5
    out = img.pixels.copy()
    out[replaced & salt] = 255
    out[replaced & ~salt] = 0
    return Image(out)


def apply_gaussian(img, strength, rng, mode="variance"):
    """Additive zero-mean Gaussian noise on the [0, 1] pixel scale, clipped and re-quantized.

    ``strength`` is the noise variance (``mode="variance"``) or its standard
    deviation (``mode="stddev"``).
    """
    if strength < 0:
        raise ValueError(f"Gaussian strength must be non-negative, got {strength}")
    if mode not in GAUSS_MODES:
        raise ValueError(f"gauss mode must be one of {GAUSS_MODES}, got {mode!r}")
    if strength == 0:
        return img
    sigma = math.sqrt(strength) if mode == "variance" else float(strength)
    noise = rng.standard_normal(img.pixels.shape) * sigma
    noisy = np.clip(img.pixels / 255.0 + noise, 0.0, 1.0) * 255.0
    return Image(_requantize(noisy))


def rotate(img, angle):
    """Rotate about the raster centre, clockwise for positive ``angle`` (degrees).

    Same-size canvas, bilinear inverse mapping; neighbours that fall outside
    the source raster contribute black.
    """
    angle = float(angle)
    if not math.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    if angle % 360 == 0:
        return img
    h, w, c = img.pixels.shape
    theta = math.radians(angle)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    dx, dy = xs - cx, ys - cy
    # inverse of a clockwise turn in y-down raster coordinates
    sx = cx + dx * cos_t + dy * sin_t
    sy = cy - dx * sin_t + dy * cos_t

    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    src = img.pixels.astype(np.float64)

    def sample(yy, xx):
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        vals = src[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return np.where(inside[..., None], vals, 0.0)

    out = (sample(y0, x0) * (1 - fx) * (1 - fy)
           + sample(y0, x0 + 1) * fx * (1 - fy)
           + sample(y0 + 1, x0) * (1 - fx) * fy
           + sample(y0 + 1, x0 + 1) * fx * fy)
    return Image(_requantize(out).reshape(h, w, c))


def step_generator(seed, dataset, image_id, condition_name, step_index):
    return keyed_generator(check_seed(seed), dataset, int(image_id), condition_name, step_index)


def apply_condition(img, condition, seed=0, dataset="custom", image_id=0, gauss_mode="variance"):
    """Apply ``condition``'s steps in order.

    Random steps draw from a stream keyed by ``(seed, dataset, image_id,
    condition name, step index)``, so the output depends on nothing else.
    """
    if isinstance(condition, str):
        condition = parse_condition(condition)
    for index, step in enumerate(condition.steps):
        if step.is_identity:
            continue
        if step.kind == "ROT":
            img = rotate(img, step.value)
            continue
        rng = step_generator(seed, dataset, image_id, condition.name, index)
        if step.kind == "SP":
            img = apply_salt_pepper(img, step.value, rng)
        else:
            img = apply_gaussian(img, step.value, rng, mode=gauss_mode)
    return img
