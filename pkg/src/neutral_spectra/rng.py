"""Counter-based SplitMix64 generator.

Every uniform is a pure function of ``(seed, stream, counter)``:

    key     = mix64(mix64(seed) + (stream + 1) * GOLDEN)
    draw    = mix64(key + (counter + 1) * GOLDEN)
    uniform = (draw >> 11) * 2**-53

with all arithmetic modulo 2**64, ``GOLDEN = 0x9E3779B97F4A7C15`` and
``mix64`` the SplitMix64 finalizer.  Simulations use one stream per trial and
a fixed block of counters per step, so results do not depend on how trials
are split across workers.
"""

from __future__ import annotations

import numpy as np

__all__ = ["GOLDEN", "mix64", "stream_key", "stream_keys", "uniform", "Stream", "uniform_block"]

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 2.0**-53


def mix64(z: int) -> int:
    z &= MASK
    z ^= z >> 30
    z = (z * _M1) & MASK
    z ^= z >> 27
    z = (z * _M2) & MASK
    z ^= z >> 31
    return z


def stream_key(seed: int, stream: int) -> int:
    return mix64(mix64(seed) + (stream + 1) * GOLDEN)


def uniform(seed: int, stream: int, counter: int) -> float:
    """The uniform in ``[0, 1)`` at position ``counter`` of ``stream``."""
    draw = mix64(stream_key(seed, stream) + (counter + 1) * GOLDEN)
    return (draw >> 11) * _INV53


class Stream:
    """Sequential view of one stream; ``next_block(k)`` consumes ``k`` counters."""

    def __init__(self, seed: int, stream: int = 0, counter: int = 0):
        self.key = stream_key(seed, stream)
        self.counter = counter

    def next(self) -> float:
        draw = mix64(self.key + (self.counter + 1) * GOLDEN)
        self.counter += 1
        return (draw >> 11) * _INV53

    def next_block(self, size: int) -> list[float]:
        return [self.next() for _ in range(size)]


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_keys(seed: int, streams: np.ndarray) -> np.ndarray:
    """Vectorized :func:`stream_key` over an array of stream indices."""
    with np.errstate(over="ignore"):
        base = np.uint64(mix64(seed))
        s = np.asarray(streams, dtype=np.uint64) + np.uint64(1)
        return _mix64_vec(base + s * np.uint64(GOLDEN))


def uniform_block(keys: np.ndarray, counter: int, size: int) -> np.ndarray:
    """Uniforms at counters ``counter .. counter+size-1`` for each key; shape ``(len(keys), size)``."""
    with np.errstate(over="ignore"):
        c = np.arange(counter + 1, counter + size + 1, dtype=np.uint64) * np.uint64(GOLDEN)
        draw = _mix64_vec(keys[:, None] + c[None, :])
    return (draw >> np.uint64(11)).astype(np.float64) * _INV53
