"""Deterministic seed derivation and generator construction.

Every random stream in the package is a Philox4x64-10 counter-based
generator keyed by a 64-bit seed.  Child seeds are derived by hashing the
parent seed together with integer or string labels (BLAKE2b, 8-byte
digest), so a stream depends only on *what* it is for, never on the
order in which work happens to be scheduled.
"""
from __future__ import annotations

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1


def _encode(part) -> bytes:
    if isinstance(part, (int, np.integer)):
        return b"i" + struct.pack("<Q", int(part) & MASK64)
    if isinstance(part, str):
        raw = part.encode("utf-8")
        return b"s" + struct.pack("<I", len(raw)) + raw
    raise TypeError(f"cannot derive a seed from {type(part).__name__}")


def derive_seed(seed: int, *labels) -> int:
    """Hash ``seed`` and ``labels`` into a new unsigned 64-bit seed."""
    h = hashlib.blake2b(digest_size=8, person=b"hqnn-dse")
    h.update(_encode(seed))
    for label in labels:
        h.update(_encode(label))
    return int.from_bytes(h.digest(), "little")


def make_rng(seed: int, *labels) -> np.random.Generator:
    """Philox generator for the stream identified by ``(seed, *labels)``."""
    key = derive_seed(seed, *labels) if labels else int(seed) & MASK64
    return np.random.Generator(np.random.Philox(key=key))
