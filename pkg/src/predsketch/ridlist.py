"""Exact rid-list sketch: the memory-hungry baseline the sampled sketch trades against.

Same grid layout as SampledSketch (one w x d grid per attribute, shared
row-hash derivation, so grids align across sketch kinds for equal seeds and
dimensions), but each cell keeps the full sorted list of rids routed to it.
Two estimators:

* estimate_min    -- per row, intersect the p queried cells and take the
                     smallest count across the d rows. One-sided error:
                     overcounts by at most eps*N with probability 1-delta
                     at w = 1 + ceil(e/eps), d = ceil(ln(1/delta)).
* estimate_intersect -- intersect all p*d queried cells at once. Error
                     shrinks to eps^d * (N - f) at the same dimensions,
                     at the price of touching every row's lists.

Both never undercount: every matching record is present in every queried
cell, so it survives any intersection.
"""

from __future__ import annotations

import math
from bisect import insort

import numpy as np

from .errors import InvalidEpsilonDelta, SchemaMismatch
from .hashing import RowHash, derive_seed
from .intersect import multiway_intersect
from .model import Estimate, Query, Record
from .sketch import check_equality_query

__all__ = ["RidListSketch"]


class RidListSketch:
    def __init__(self, attribute_count: int, epsilon: float, delta: float, master_seed: int = 0):
        if not 0.0 < epsilon < 1.0 or not 0.0 < delta < 1.0:
            raise InvalidEpsilonDelta(f"epsilon and delta must be in (0, 1), got {epsilon}, {delta}")
        w = 1 + math.ceil(math.e / epsilon)
        d = math.ceil(math.log(1.0 / delta))
        self._init_dimensions(attribute_count, w, d, master_seed)
        self.epsilon = epsilon
        self.delta = delta

    @classmethod
    def from_dimensions(
        cls, attribute_count: int, w: int, d: int, master_seed: int = 0
    ) -> "RidListSketch":
        sk = cls.__new__(cls)
        sk._init_dimensions(attribute_count, w, d, master_seed)
        sk.epsilon = None
        sk.delta = None
        return sk

    def _init_dimensions(self, attribute_count: int, w: int, d: int, master_seed: int) -> None:
        self.attribute_count = attribute_count
        self.w = w
        self.d = d
        self.master_seed = master_seed
        self.hashes = [
            [RowHash(derive_seed(master_seed, i, j), w) for j in range(1, d + 1)]
            for i in range(1, attribute_count + 1)
        ]
        self.cells: list[list[list[list[int]]]] = [
            [[[] for _ in range(w)] for _ in range(d)] for _ in range(attribute_count)
        ]
        self.n = 0

    def insert(self, record: Record) -> None:
        if len(record.values) != self.attribute_count:
            raise SchemaMismatch(
                f"record has {len(record.values)} values, sketch expects {self.attribute_count}"
            )
        rid = record.rid
        for i, value in enumerate(record.values):
            for j in range(self.d):
                col = self.hashes[i][j].column(value) - 1
                cell = self.cells[i][j][col]
                # rids usually arrive in increasing order; keep the append fast path
                if not cell or rid >= cell[-1]:
                    cell.append(rid)
                else:
                    insort(cell, rid)
        self.n += 1

    def insert_many(self, rids: np.ndarray, values: np.ndarray) -> None:
        values = np.ascontiguousarray(values, dtype=np.uint64)
        if values.ndim != 2 or values.shape[1] != self.attribute_count:
            raise SchemaMismatch(
                f"value matrix must be (n, {self.attribute_count}), got {values.shape}"
            )
        rid_list = [int(r) for r in rids]
        for i in range(self.attribute_count):
            for j in range(self.d):
                cols = self.hashes[i][j].columns(values[:, i])
                row = self.cells[i][j]
                for t, col in enumerate(cols):
                    cell = row[col]
                    rid = rid_list[t]
                    if not cell or rid >= cell[-1]:
                        cell.append(rid)
                    else:
                        insort(cell, rid)
        self.n += values.shape[0]

    def _cells_for(self, query: Query) -> list[list[list[int]]]:
        """Queried cell lists grouped by row: result[j] has one list per predicate."""
        check_equality_query(query, self.attribute_count)
        by_row: list[list[list[int]]] = [[] for _ in range(self.d)]
        for pred in query.predicates:
            i = pred.attribute - 1
            for j in range(self.d):
                col = self.hashes[i][j].column(pred.value) - 1
                by_row[j].append(self.cells[i][j][col])
        return by_row

    def estimate_min(self, query: Query) -> Estimate:
        by_row = self._cells_for(query)
        best = None
        n_max = 0
        for row_lists in by_row:
            n_max = max(n_max, max(len(c) for c in row_lists))
            size = len(multiway_intersect(row_lists).common)
            if best is None or size < best:
                best = size
        return Estimate(value=float(best), intersection_size=best, n_max=n_max)

    def estimate_intersect(self, query: Query) -> Estimate:
        by_row = self._cells_for(query)
        all_lists = [cell for row_lists in by_row for cell in row_lists]
        n_max = max(len(c) for c in all_lists)
        size = len(multiway_intersect(all_lists).common)
        return Estimate(value=float(size), intersection_size=size, n_max=n_max)

    def memory_model_bits(self) -> int:
        # 32 bits per cell header plus 32 bits per stored rid
        total = 0
        for attr_cells in self.cells:
            for row in attr_cells:
                for cell in row:
                    total += 32 + 32 * len(cell)
        return total
