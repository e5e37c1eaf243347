"""Keyed random streams.

Every random draw in the benchmark comes from a Philox (counter-based)
generator whose 128-bit key is a hash of the draw's identity, e.g.
``(seed, dataset, image_id, condition, step)``. Streams therefore do not
depend on evaluation order or on how work is split across processes.
"""
import hashlib

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return int(seed)


def _token(part):
    if isinstance(part, str):
        return "s" + part
    if isinstance(part, (int, np.integer)) and not isinstance(part, bool):
        return "i" + str(int(part))
    raise TypeError(f"stream key parts must be str or int, got {type(part).__name__}")


def stream_key(*parts):
    """Hash ``parts`` into the two 64-bit words of a Philox key."""
    text = "\x1f".join(_token(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return np.frombuffer(digest[:16], dtype="<u8").copy()


def keyed_generator(*parts):
    return np.random.Generator(np.random.Philox(key=stream_key(*parts)))
