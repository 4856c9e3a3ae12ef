"""Seedable, splittable SplitMix64 streams.

Every simulation draws from a :class:`Stream` derived from a master seed and a
short tuple of integer labels (grid row, grid column, trial, ...).  Streams
with the same seed and labels produce the same uniforms on every platform, so
results do not depend on worker count or evaluation order.

:class:`StreamBatch` advances many streams in lockstep with numpy ``uint64``
arithmetic; element ``k`` of a batch is bit-identical to the scalar stream
built from the same labels.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError

__all__ = [
    "GAMMA",
    "MASK64",
    "SeedSpec",
    "Stream",
    "StreamBatch",
    "bernoulli",
    "derive_stream",
    "derive_batch",
    "mix64",
]

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TO_UNIT = 2.0**-53
MAX_LABELS = 4


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64 without warnings.
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int = 1

    def __post_init__(self):
        if not 0 <= self.master_seed <= MASK64:
            raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")


def _check_labels(labels: Sequence[int]) -> None:
    if len(labels) > MAX_LABELS:
        raise ParameterError(f"at most {MAX_LABELS} labels allowed, got {len(labels)}")
    for label in labels:
        if not 0 <= int(label) <= MASK64:
            raise ParameterError(f"label {label} is not a 64-bit unsigned integer")


def _fold(state: int, label: int) -> int:
    return mix64((state + GAMMA) ^ label)


class Stream:
    """A single-owner SplitMix64 stream.

    ``state`` is advanced by the golden-ratio increment before every output,
    and the output is the finalized state.
    """

    __slots__ = ("state", "draws")

    def __init__(self, state: int):
        self.state = state & MASK64
        self.draws = 0

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        self.draws += 1
        return mix64(self.state)

    def next_uniform(self) -> float:
        """Uniform in [0, 1) from the top 53 bits of the next output."""
        return (self.next_u64() >> 11) * _TO_UNIT

    def __repr__(self):
        return f"Stream(state={self.state:#018x}, draws={self.draws})"


def derive_stream(seed: SeedSpec | int, labels: Sequence[int] = ()) -> Stream:
    """Derive the stream identified by ``labels`` under ``seed``."""
    master = seed.master_seed if isinstance(seed, SeedSpec) else SeedSpec(seed).master_seed
    _check_labels(labels)
    state = mix64(master)
    for label in labels:
        state = _fold(state, int(label))
    return Stream(state)


def bernoulli(stream: Stream, p: float) -> int:
    """Return 1 iff the next uniform is below ``p``; consumes one draw."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"probability must lie in [0, 1], got {p}")
    return int(stream.next_uniform() < p)


class StreamBatch:
    """Many independent streams advanced together.

    Stream ``k`` equals ``derive_stream(seed, labels + [first + k])``.
    """

    def __init__(self, states: np.ndarray):
        self.states = np.asarray(states, dtype=np.uint64).copy()
        self.draws = 0

    def __len__(self):
        return len(self.states)

    def next_u64(self) -> np.ndarray:
        self.states += np.uint64(GAMMA)
        self.draws += 1
        return _mix64_array(self.states)

    def next_uniform(self) -> np.ndarray:
        return (self.next_u64() >> np.uint64(11)).astype(np.float64) * _TO_UNIT

    def bernoulli(self, p) -> np.ndarray:
        """Vectorized :func:`bernoulli`; ``p`` may be a scalar or per-stream array."""
        p_arr = np.asarray(p, dtype=np.float64)
        if np.any((p_arr < 0.0) | (p_arr > 1.0)):
            raise ParameterError("probability must lie in [0, 1]")
        return self.next_uniform() < p_arr


def derive_batch(seed: SeedSpec | int, labels: Sequence[int], count: int, first: int = 0) -> StreamBatch:
    """Streams for trial indices ``first .. first + count - 1`` appended to ``labels``."""
    parent = derive_stream(seed, labels)
    _check_labels(list(labels) + [first + count - 1 if count else first])
    trial = np.arange(first, first + count, dtype=np.uint64)
    base = np.uint64((parent.state + GAMMA) & MASK64)
    return StreamBatch(_mix64_array(base ^ trial))
