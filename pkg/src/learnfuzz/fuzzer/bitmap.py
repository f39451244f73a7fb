"""Edge-coverage bitmap and global novelty tracking."""
from __future__ import annotations

import numpy as np

from learnfuzz import _kernels

MAP_SIZE = _kernels.MAP_SIZE
BUCKET_LABELS = ("1", "2", "3", "4-7", "8-15", "16-31", "32-127", "128+")


def bucket_of(count: int) -> int:
    """Hit-count bucket index (0..7) of a nonzero counter."""
    if not 0 < count < 256:
        raise ValueError(f"counter value {count} outside 1..255")
    return _kernels.BUCKET_MASK[count].bit_length() - 1


class TraceBitmap:
    """64 KiB of saturating 8-bit edge counters plus the previous-location register."""

    __slots__ = ("bytes", "prev")

    def __init__(self):
        self.bytes = bytearray(MAP_SIZE)
        self.prev = 0

    def clear(self):
        self.bytes[:] = bytes(MAP_SIZE)
        self.prev = 0

    def record(self, cur_location: int):
        if not 0 <= cur_location < MAP_SIZE:
            raise ValueError(f"location {cur_location} outside 0..{MAP_SIZE - 1}")
        self.prev = _kernels.record_edges(self.bytes, self.prev, (cur_location,))

    def record_many(self, locations):
        self.prev = _kernels.record_edges(self.bytes, self.prev, locations)

    def nonzero(self) -> np.ndarray:
        return np.flatnonzero(np.frombuffer(self.bytes, dtype=np.uint8))


def record_edge(bitmap: TraceBitmap, cur_location: int) -> None:
    bitmap.record(cur_location)


def classify(bitmap: TraceBitmap) -> frozenset:
    """Coverage signature: the set of (index, bucket) pairs of nonzero counters."""
    arr = np.frombuffer(bitmap.bytes, dtype=np.uint8)
    idx = np.flatnonzero(arr)
    masks = np.frombuffer(_kernels.BUCKET_MASK, dtype=np.uint8)[arr[idx]]
    buckets = np.log2(masks).astype(np.int64)
    return frozenset(zip(idx.tolist(), buckets.tolist()))


class CoverageMap:
    """Every (index, bucket) pair observed so far, one bit per bucket."""

    def __init__(self):
        self.virgin = bytearray(MAP_SIZE)

    def __len__(self):
        return int(np.unpackbits(np.frombuffer(self.virgin, dtype=np.uint8)).sum())

    def __contains__(self, pair):
        index, bucket = pair
        return bool(self.virgin[index] >> bucket & 1)

    def absorb(self, signature) -> bool:
        """Set semantics: True iff some pair is new; new pairs are recorded."""
        new = False
        for index, bucket in signature:
            bit = 1 << bucket
            if not self.virgin[index] & bit:
                self.virgin[index] |= bit
                new = True
        return new

    def absorb_bitmap(self, bitmap: TraceBitmap) -> int:
        """Same as ``absorb(classify(bitmap))`` but returns 0, 1 (new bucket) or 2 (new edge)."""
        return _kernels.has_new_bits(bitmap.bytes, self.virgin)


def is_interesting(global_map: CoverageMap, signature) -> bool:
    return global_map.absorb(signature)
