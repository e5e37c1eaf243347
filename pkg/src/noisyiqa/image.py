"""In-memory image type and the pixel primitives shared by every stage."""
from dataclasses import dataclass

import numpy as np

# BT.601 luma weights in thousandths, so conversion stays in integer arithmetic.
_LUMA_WEIGHTS = np.array([299, 587, 114], dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Image:
    """An 8-bit image stored as a read-only ``(height, width, channels)`` array.

    ``channels`` is 1 (grayscale) or 3 (interleaved RGB).
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w), (h, w, 1) or (h, w, 3) pixels, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer) or arr.min() < 0 or arr.max() > 255:
                raise ValueError("pixels must be 8-bit values in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, dtype=np.uint8, order="C")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_buffer(cls, width, height, channels, buffer):
        """Build from a flat row-major, channel-interleaved byte buffer."""
        data = np.frombuffer(bytes(buffer), dtype=np.uint8)
        if data.size != width * height * channels:
            raise ValueError(
                f"buffer holds {data.size} values, expected {width}*{height}*{channels}"
            )
        return cls(data.reshape(height, width, channels))

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def channels(self):
        return self.pixels.shape[2]

    @property
    def shape(self):
        return self.pixels.shape

    def tobytes(self):
        return self.pixels.tobytes()

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.shape, self.pixels.tobytes()))

    def __repr__(self):
        return f"Image(width={self.width}, height={self.height}, channels={self.channels})"


def rgb_to_luma(img):
    """Convert a 3-channel image to BT.601 luma, rounding halves away from zero."""
    if img.channels != 3:
        raise ValueError("rgb_to_luma needs a 3-channel image")
    weighted = img.pixels.astype(np.int64) @ _LUMA_WEIGHTS
    luma = np.clip((weighted + 500) // 1000, 0, 255)
    return Image(luma.astype(np.uint8))


def to_plane(img):
    """Single float64 luminance plane of ``img`` (RGB is converted to luma first)."""
    if img.channels == 3:
        img = rgb_to_luma(img)
    return img.pixels[:, :, 0].astype(np.float64)


def box_downsample2(plane):
    """Halve both dimensions by averaging 2x2 blocks; a trailing odd row/column is dropped."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError("expected a 2-D plane")
    h, w = plane.shape
    if h < 2 or w < 2:
        raise ValueError(f"plane of {w}x{h} is too small to downsample")
    h2, w2 = h // 2, w // 2
    blocks = plane[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2)
    return (blocks[:, 0, :, 0] + blocks[:, 0, :, 1] + blocks[:, 1, :, 0] + blocks[:, 1, :, 1]) / 4.0
