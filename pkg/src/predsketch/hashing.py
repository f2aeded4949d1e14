"""Seeded hash families used by the sketches.

Two families live here:

* RowHash -- pairwise-independent column hashes, one per (attribute, row).
  The family is a degree-1 polynomial over a Mersenne-prime field applied
  to a bijectively pre-mixed input, h(x) = ((a*mix64(x) + b) mod p) mod w + 1
  with p = 2**61 - 1, mapping any u64 value to a column in [1, w]. The
  pre-mix matters: affine maps send arithmetic progressions to arithmetic
  progressions, so without it a whole consecutive integer domain (the
  typical dictionary encoding) lands in a single column whenever a mod w
  degenerates -- roughly a 1/w chance per row. mix64 is a bijection, so for
  fixed distinct x != y the collision probability over the (a, b) draw is
  still 1/w up to O(w/p).

* RidHasher -- a strong keyed mixer producing b-bit record fingerprints.
  The mixer is a bijection on u64, so two rids can only collide in the
  final b-bit mask: expected collisions among n rids follow the birthday
  bound n*(n-1)/2**(b+1).

Every random choice in the package flows from one master seed through
derive_seed, so a sketch is fully reproducible from (params, seed) alone.
Derivation is pure integer arithmetic: no stdlib RNG state is involved, and
snapshots reload identically across interpreter versions.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidWidth

M61 = (1 << 61) - 1
_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

__all__ = ["M61", "mix64", "derive_seed", "RowHash", "RidHasher", "new_row_hash"]


def mix64(x: int) -> int:
    """splitmix64 finalizer: a bijective avalanche mix of one u64 word."""
    x &= _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


def derive_seed(master: int, *parts: int) -> int:
    """Fold index parts into the master seed, one mix round per part.

    Chains of different lengths land in different streams, so
    derive_seed(s, i, j) never equals derive_seed(s, i, j, 0).
    """
    s = mix64((master & _M64) + _GOLDEN)
    for part in parts:
        s = mix64(s ^ ((part * _GOLDEN + 1) & _M64))
    return s


class RowHash:
    """One drawn member of the pairwise-independent column family."""

    __slots__ = ("seed", "w", "a", "b")

    def __init__(self, seed: int, w: int):
        if w < 1:
            raise InvalidWidth(f"row width must be >= 1, got {w}")
        self.seed = seed
        self.w = w
        # a in [1, p), b in [0, p); modulo bias over 2^64 draws is ~2^-3
        self.a = derive_seed(seed, 1) % (M61 - 1) + 1
        self.b = derive_seed(seed, 2) % M61

    def column(self, value: int) -> int:
        """Column in [1, w] for one u64 value."""
        return ((self.a * mix64(value) + self.b) % M61) % self.w + 1

    def columns(self, values: np.ndarray) -> np.ndarray:
        """Vectorized column(), 0-based output for direct array indexing.

        Computes (a*mix64(value) + b) mod p on uint64 arrays by splitting
        the product into 32-bit half-products and folding with 2**61 == 1
        (mod p). All intermediates stay below 2**63.
        """
        x = np.ascontiguousarray(values, dtype=np.uint64)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x ^= x >> np.uint64(31)
        p = np.uint64(M61)
        mask32 = np.uint64(0xFFFFFFFF)
        a_lo = np.uint64(self.a & 0xFFFFFFFF)
        a_hi = np.uint64(self.a >> 32)  # < 2^29

        x_lo = x & mask32
        x_hi = x >> np.uint64(32)

        # low product < 2^64: fold once
        t0 = a_lo * x_lo
        t0 = (t0 & p) + (t0 >> np.uint64(61))
        # cross terms scaled by 2^32
        t1 = a_lo * x_hi
        t1 = (t1 & p) + (t1 >> np.uint64(61))
        mid = t1 + a_hi * x_lo  # < 2^62
        mid = (mid >> np.uint64(29)) + ((mid & np.uint64((1 << 29) - 1)) << np.uint64(32))
        # high product scaled by 2^64 == 8 (mod p)
        t3 = (a_hi * x_hi) << np.uint64(3)
        t3 = (t3 & p) + (t3 >> np.uint64(61))

        acc = t0 + mid + t3  # < 3 * 2^61 < 2^63
        acc = (acc & p) + (acc >> np.uint64(61))
        acc += np.uint64(self.b)
        acc = (acc & p) + (acc >> np.uint64(61))
        acc[acc >= p] -= p
        return (acc % np.uint64(self.w)).astype(np.int64)


def new_row_hash(seed: int, w: int) -> RowHash:
    return RowHash(seed, w)


class RidHasher:
    """Keyed b-bit fingerprints for record identifiers, 1 <= b <= 64."""

    __slots__ = ("seed", "bits", "_key", "_mask")

    def __init__(self, seed: int, bits: int):
        if not 1 <= bits <= 64:
            raise InvalidWidth(f"fingerprint bits must be in [1, 64], got {bits}")
        self.seed = seed
        self.bits = bits
        self._key = derive_seed(seed, 3)
        self._mask = (1 << bits) - 1

    def fingerprint(self, rid: int) -> int:
        return mix64(rid ^ self._key) & self._mask

    def fingerprints(self, rids: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(rids, dtype=np.uint64) ^ np.uint64(self._key)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x ^= x >> np.uint64(31)
        return x & np.uint64(self._mask)
