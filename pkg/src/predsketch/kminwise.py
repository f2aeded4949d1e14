"""Bounded K-minimum-value sample of record fingerprints.

A Cell tracks every fingerprint ever offered to it in two pieces of state:
a total offer count `cnt`, and the set of the at-most-B smallest distinct
fingerprints seen so far, kept sorted. Once the sample is full its largest
member doubles as the admission threshold s_max: an incoming fingerprint
enters iff it is strictly smaller and not already present, evicting the
current maximum. The final state therefore depends only on the multiset of
offers, never on their order.

The "not full yet" threshold is the sentinel INF_THRESHOLD = 2**64 - 1,
strictly above any fingerprint of width b <= 63.
"""

from __future__ import annotations

from bisect import bisect_left

INF_THRESHOLD = (1 << 64) - 1

__all__ = ["INF_THRESHOLD", "Cell"]


class Cell:
    __slots__ = ("capacity", "cnt", "values")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"sample capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.cnt = 0
        self.values: list[int] = []  # sorted, distinct

    def insert(self, fp: int) -> None:
        """Offer one fingerprint: count it, admit it if among the B smallest."""
        self.cnt += 1
        values = self.values
        if len(values) < self.capacity:
            pos = bisect_left(values, fp)
            if pos == len(values) or values[pos] != fp:
                values.insert(pos, fp)
        elif fp < values[-1]:
            pos = bisect_left(values, fp)
            if values[pos] != fp:
                values.pop()
                values.insert(pos, fp)

    def threshold(self) -> int:
        """Current s_max; INF_THRESHOLD while the sample is not full."""
        if len(self.values) == self.capacity:
            return self.values[-1]
        return INF_THRESHOLD

    def seek(self, fp: int) -> int | None:
        """Smallest sampled fingerprint >= fp, or None past the end."""
        pos = bisect_left(self.values, fp)
        return self.values[pos] if pos < len(self.values) else None

    def iter_sorted(self):
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        return f"Cell(cnt={self.cnt}, sample={len(self.values)}/{self.capacity})"
