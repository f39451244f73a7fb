"""Deterministic mutation stages, havoc and splicing over raw byte traces.

Bit offsets count from the most significant bit of the first byte.
Multi-byte integers are little-endian.
"""
from __future__ import annotations

import random
import struct

ARITH_MAX = 35
INTERESTING_8 = (-128, -1, 0, 1, 16, 32, 64, 100, 127)
INTERESTING_16 = INTERESTING_8 + (-32768, -129, 128, 255, 256, 512, 1000, 1024, 4096, 32767)
INTERESTING_32 = INTERESTING_16 + (-2147483648, -100663046, -32769, 32768, 65535, 65536,
                                   100663045, 2147483647)
_FMT = {1: "<B", 2: "<H", 4: "<I"}
_MASK = {1: 0xFF, 2: 0xFFFF, 4: 0xFFFFFFFF}

HAVOC_OPS = ("flip-bit", "set-discovered-byte", "add-sub", "insert-byte",
             "delete-block", "duplicate-block", "zero-block")


class IdenticalSignatureError(ValueError):
    pass


def _bitflips(buf, width):
    for bit in range(len(buf) * 8 - width + 1):
        out = bytearray(buf)
        for b in range(bit, bit + width):
            out[b >> 3] ^= 0x80 >> (b & 7)
        yield bytes(out)


def _byteflips(buf, width):
    for i in range(len(buf) - width + 1):
        out = bytearray(buf)
        for j in range(i, i + width):
            out[j] ^= 0xFF
        yield bytes(out)


def _arith(buf, width):
    fmt, mask = _FMT[width], _MASK[width]
    for i in range(len(buf) - width + 1):
        (val,) = struct.unpack_from(fmt, buf, i)
        for delta in range(1, ARITH_MAX + 1):
            for new in (val + delta, val - delta):
                out = bytearray(buf)
                struct.pack_into(fmt, out, i, new & mask)
                yield bytes(out)


def _interesting(buf, width, values):
    fmt, mask = _FMT[width], _MASK[width]
    for i in range(len(buf) - width + 1):
        for v in values:
            out = bytearray(buf)
            struct.pack_into(fmt, out, i, v & mask)
            yield bytes(out)


STAGES = (
    ("flip1", lambda b: _bitflips(b, 1)),
    ("flip2", lambda b: _bitflips(b, 2)),
    ("flip4", lambda b: _bitflips(b, 4)),
    ("flip8", lambda b: _byteflips(b, 1)),
    ("flip16", lambda b: _byteflips(b, 2)),
    ("flip32", lambda b: _byteflips(b, 4)),
    ("arith8", lambda b: _arith(b, 1)),
    ("arith16", lambda b: _arith(b, 2)),
    ("arith32", lambda b: _arith(b, 4)),
    ("interest8", lambda b: _interesting(b, 1, INTERESTING_8)),
    ("interest16", lambda b: _interesting(b, 2, INTERESTING_16)),
    ("interest32", lambda b: _interesting(b, 4, INTERESTING_32)),
)


def deterministic_mutations(trace: bytes):
    """All deterministic mutants of ``trace`` in stage order (lazy)."""
    trace = bytes(trace)
    for _, stage in STAGES:
        yield from stage(trace)


def _block_len(rng, limit):
    return rng.randint(1, max(1, min(limit, 32)))


def havoc(trace: bytes, rng: random.Random, intensity: int = 8,
          discovered: bytes = b"", max_len: int = 4096) -> bytes:
    """Apply a random stack of 1..intensity operations; the result stays nonempty."""
    buf = bytearray(trace)
    if intensity <= 0:
        return bytes(buf)
    if not buf:
        buf.append(rng.randrange(256))
    for _ in range(rng.randint(1, intensity)):
        op = rng.randrange(len(HAVOC_OPS))
        n = len(buf)
        if op == 0:
            bit = rng.randrange(n * 8)
            buf[bit >> 3] ^= 0x80 >> (bit & 7)
        elif op == 1:
            pool = discovered or bytes(buf)
            buf[rng.randrange(n)] = pool[rng.randrange(len(pool))]
        elif op == 2:
            i = rng.randrange(n)
            delta = rng.randint(1, ARITH_MAX)
            buf[i] = (buf[i] + (delta if rng.random() < 0.5 else -delta)) & 0xFF
        elif op == 3:
            if n < max_len:
                buf.insert(rng.randint(0, n), rng.randrange(256))
        elif op == 4:
            if n > 1:
                size = _block_len(rng, n - 1)
                start = rng.randint(0, n - size)
                del buf[start:start + size]
        elif op == 5:
            size = _block_len(rng, n)
            src = rng.randint(0, n - size)
            block = buf[src:src + size]
            if rng.random() < 0.5:
                dst = rng.randint(0, n - size)
                buf[dst:dst + size] = block
            elif n + size <= max_len:
                dst = rng.randint(0, n)
                buf[dst:dst] = block
        else:
            size = _block_len(rng, n)
            start = rng.randint(0, n - size)
            buf[start:start + size] = bytes(size)
    return bytes(buf)


def splice(a: bytes, b: bytes, rng: random.Random, cut_a: int | None = None,
           cut_b: int | None = None, sig_a=None, sig_b=None) -> bytes:
    """``a[:cut_a] + b[cut_b:]`` with random cuts; never empty."""
    if not a or not b:
        raise ValueError("splice needs two nonempty traces")
    if sig_a is not None and sig_a == sig_b:
        raise IdenticalSignatureError("splice partners must have different coverage")
    fixed = cut_a is not None and cut_b is not None
    while True:
        ca = rng.randint(0, len(a)) if cut_a is None else cut_a
        cb = rng.randint(0, len(b)) if cut_b is None else cut_b
        out = bytes(a[:ca]) + bytes(b[cb:])
        if out:
            return out
        if fixed:
            raise ValueError("cut points produce an empty trace")
