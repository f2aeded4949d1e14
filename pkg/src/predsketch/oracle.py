"""Exact references the sketches are measured against. Desk scale only:
everything here is memory-unbounded by design.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import SchemaMismatch
from .kminwise import INF_THRESHOLD
from .model import Equals, Query, Record

__all__ = ["RecordStore", "kmin_oracle"]


class RecordStore:
    """Append-only store answering conjunctive queries by full scan."""

    def __init__(self, attribute_count: int):
        self.attribute_count = attribute_count
        self._records: list[Record] = []
        self._matrix: np.ndarray | None = None

    @classmethod
    def from_arrays(cls, rids: Sequence[int], values: np.ndarray) -> "RecordStore":
        values = np.ascontiguousarray(values, dtype=np.uint64)
        store = cls(values.shape[1])
        store._records = [
            Record(int(rid), tuple(int(v) for v in row)) for rid, row in zip(rids, values)
        ]
        store._matrix = values
        return store

    def append(self, record: Record) -> None:
        if len(record.values) != self.attribute_count:
            raise SchemaMismatch(
                f"record has {len(record.values)} values, store expects {self.attribute_count}"
            )
        self._records.append(record)
        self._matrix = None  # invalidated, rebuilt on next count

    def __len__(self) -> int:
        return len(self._records)

    @property
    def records(self) -> list[Record]:
        return self._records

    def _values(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.array(
                [rec.values for rec in self._records], dtype=np.uint64
            ).reshape(len(self._records), self.attribute_count)
        return self._matrix

    def count(self, query: Query) -> int:
        """Exact number of stored records satisfying every predicate."""
        if not self._records:
            return 0
        values = self._values()
        mask = np.ones(len(self._records), dtype=bool)
        for pred in query.predicates:
            col = values[:, pred.attribute - 1]
            if isinstance(pred, Equals):
                mask &= col == np.uint64(pred.value)
            else:
                mask &= (col >= np.uint64(pred.lo)) & (col <= np.uint64(pred.hi))
        return int(mask.sum())

    def matching_rids(self, query: Query) -> list[int]:
        values = self._values()
        mask = np.ones(len(self._records), dtype=bool)
        for pred in query.predicates:
            col = values[:, pred.attribute - 1]
            if isinstance(pred, Equals):
                mask &= col == np.uint64(pred.value)
            else:
                mask &= (col >= np.uint64(pred.lo)) & (col <= np.uint64(pred.hi))
        return [self._records[i].rid for i in np.nonzero(mask)[0]]


def kmin_oracle(offers: Iterable[int], capacity: int) -> tuple[int, list[int], int]:
    """Order-free reference for Cell state: sort, dedupe, keep the B smallest.

    Returns (cnt, sample, threshold) where threshold is the sentinel
    INF_THRESHOLD unless the sample reached capacity.
    """
    offers = list(offers)
    sample = sorted(set(offers))[:capacity]
    threshold = sample[-1] if len(sample) == capacity else INF_THRESHOLD
    return len(offers), sample, threshold
