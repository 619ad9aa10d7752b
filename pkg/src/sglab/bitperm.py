"""Bit-string utilities and scrambled cost tables.

A scramble table is a uniformly random permutation of the 2^n n-bit strings,
stored explicitly together with its inverse.  The cost of a string z is the
Hamming weight of its preimage, so the table fully determines the diagonal of
the adiabatic operator built on top of it.

Randomness comes from numpy's Philox counter-based generator keyed directly by
the 64-bit seed.  The shuffle is a Fisher-Yates pass whose index draws use
rejection sampling (no modulo bias), so for a fixed (n, seed) the table is
reproducible bit-for-bit across platforms.  The generator tag below is stored
in every sidecar file; bump it if the sampling scheme ever changes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ResourceLimitError

GENERATOR_TAG = "philox4x64/fisher-yates-1"
IDENTITY_TAG = "identity"

#: Hard cap on table size: 2^24 entries * 4 bytes each is 64 MiB per array.
MAX_TABLE_BITS = 24

_SIDECAR_MAGIC = b"SGLABTB1"

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


def popcount(values: np.ndarray) -> np.ndarray:
    """Per-element number of set bits for an unsigned integer array."""
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(values)
    # SWAR fallback for older numpy: fold pairs, nibbles, then bytes.
    v = values.astype(np.uint64)
    v = v - ((v >> np.uint64(1)) & _M1)
    v = (v & _M2) + ((v >> np.uint64(2)) & _M2)
    v = (v + (v >> np.uint64(4))) & _M4
    return ((v * _H01) >> np.uint64(56)).astype(np.uint8)


def hamming_weight(z: int) -> int:
    """Number of set bits of a nonnegative integer."""
    if z < 0:
        raise ValueError("hamming_weight expects a nonnegative integer")
    return int(z).bit_count()


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_TABLE_BITS:
        raise ResourceLimitError(
            f"table size n={n} outside supported range 1..{MAX_TABLE_BITS}"
        )


@dataclass(frozen=True)
class ScrambleTable:
    """Explicit permutation of the 2^n strings plus its inverse.

    forward[x] is the scrambled image of x; inverse[z] recovers the preimage,
    so cost(z) = hamming_weight(inverse[z]).
    """

    n: int
    forward: np.ndarray
    inverse: np.ndarray
    seed: int
    generator: str = GENERATOR_TAG
    _cost: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.forward.setflags(write=False)
        self.inverse.setflags(write=False)

    @classmethod
    def random(cls, n: int, seed: int) -> "ScrambleTable":
        _check_n(n)
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        rng = np.random.Generator(np.random.Philox(key=seed))
        forward = rng.permutation(1 << n).astype(np.uint32)
        inverse = np.empty_like(forward)
        inverse[forward] = np.arange(1 << n, dtype=np.uint32)
        return cls(n=n, forward=forward, inverse=inverse, seed=seed)

    @classmethod
    def identity(cls, n: int) -> "ScrambleTable":
        _check_n(n)
        forward = np.arange(1 << n, dtype=np.uint32)
        return cls(n=n, forward=forward, inverse=forward, seed=0,
                   generator=IDENTITY_TAG)

    @property
    def size(self) -> int:
        return 1 << self.n

    def cost(self, z: int) -> int:
        """Scrambled cost of a single string index."""
        if not 0 <= z < self.size:
            raise ValueError(f"string index {z} out of range for n={self.n}")
        return int(self.inverse[z]).bit_count()

    def cost_array(self) -> np.ndarray:
        """Costs of all strings, cached, one byte per entry."""
        if self._cost is None:
            cost = popcount(self.inverse).astype(np.uint8)
            cost.setflags(write=False)
            object.__setattr__(self, "_cost", cost)
        return self._cost

    def minimizer(self) -> int:
        """The unique string of cost zero, i.e. the image of the all-zeros string."""
        return int(self.forward[0])

    # -- sidecar serialization ------------------------------------------------

    def save(self, path) -> None:
        """Write magic, n, seed, generator tag, then the forward array (LE u32)."""
        tag = self.generator.encode()
        header = _SIDECAR_MAGIC + struct.pack("<IQH", self.n, self.seed, len(tag)) + tag
        body = self.forward.astype("<u4").tobytes()
        Path(path).write_bytes(header + body)

    @classmethod
    def load(cls, path) -> "ScrambleTable":
        raw = Path(path).read_bytes()
        if raw[:8] != _SIDECAR_MAGIC:
            raise ConfigError(f"{path}: not a scramble table sidecar")
        n, seed, taglen = struct.unpack_from("<IQH", raw, 8)
        _check_n(n)
        off = 8 + 14
        tag = raw[off:off + taglen].decode()
        forward = np.frombuffer(raw[off + taglen:], dtype="<u4").astype(np.uint32)
        if forward.shape[0] != 1 << n:
            raise ConfigError(f"{path}: body length does not match n={n}")
        counts = np.bincount(forward, minlength=1 << n)
        if counts.max(initial=0) != 1:
            raise ConfigError(f"{path}: forward array is not a permutation")
        inverse = np.empty_like(forward)
        inverse[forward] = np.arange(1 << n, dtype=np.uint32)
        return cls(n=n, forward=forward, inverse=inverse, seed=seed, generator=tag)
