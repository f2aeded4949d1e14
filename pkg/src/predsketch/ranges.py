"""Dyadic ladders: interval predicates on top of the sampled sketch.

A range-enabled attribute with domain [1, 2**m] gets m stacked grids
(levels 0..m-1). Level k coarsens the domain into blocks of 2**k values:
a record with value v lands in the level-k cell keyed by
x = ceil(v / 2**k) - 1, i.e. the block [x*2**k + 1, (x+1)*2**k].

canonical_cover() decomposes any closed interval into at most 2*m aligned
blocks, so an interval predicate is answered by merging the covered cells
(per row) into one effective cell and running the shared estimator. The
one exception is the full-domain interval, whose cover is the single root
block: it matches every record, so it contributes no cells and drops out
of the intersection (a query made only of such predicates is answered with
the exact stream length). For proper subranges:

* cnt of the merged cell is the sum of component cnts,
* its admission threshold tau is the minimum component threshold,
* its sample is the union of component samples restricted to values
  strictly below tau (each component knows all of its fingerprints below
  tau, so the union is a faithful K-min style sample of the block union).

Equality predicates read the level-0 grid directly; attributes that are
not range-enabled keep a single plain grid keyed by the raw value, seeded
exactly like SampledSketch so point-only schemas estimate identically.
"""

from __future__ import annotations

import numpy as np

from .errors import OutOfDomain, RangePredicateUnsupported, SchemaMismatch
from .hashing import RidHasher, derive_seed
from .kminwise import INF_THRESHOLD
from .model import Equals, Estimate, InRange, Query, Record, Schema, validate_query
from .sketch import AttributeGrid, SampleView, SketchParams, estimate_from_views, model_bits

__all__ = ["canonical_cover", "merge_views", "RangeSketch"]


def canonical_cover(lo: int, hi: int, domain_bits: int) -> list[tuple[int, int]]:
    """Minimal dyadic decomposition of [lo, hi] within [1, 2**domain_bits].

    Returns (level, key) pieces, in increasing value order, where piece
    (k, x) spans [x*2**k + 1, (x+1)*2**k]. len(result) <= 2*domain_bits,
    with the single piece (domain_bits, 0) for the full domain.
    """
    size = 1 << domain_bits
    if lo < 1 or hi > size or lo > hi:
        raise OutOfDomain(f"[{lo}, {hi}] is not a subrange of [1, {size}]")
    pieces: list[tuple[int, int]] = []
    cur = lo - 1  # 0-based from here on
    end = hi - 1
    while cur <= end:
        align = (cur & -cur).bit_length() - 1 if cur else domain_bits
        fit = (end - cur + 1).bit_length() - 1
        k = min(align, fit)
        pieces.append((k, cur >> k))
        cur += 1 << k
    return pieces


def merge_views(components: list[tuple[int, list[int], int]]) -> SampleView:
    """Fuse (cnt, sample, threshold) cell states into one effective cell."""
    tau = min((t for _, _, t in components), default=INF_THRESHOLD)
    cnt = sum(c for c, _, _ in components)
    if tau == INF_THRESHOLD:
        merged: set[int] = set()
        for _, values, _ in components:
            merged.update(values)
    else:
        merged = set()
        for _, values, _ in components:
            for fp in values:
                if fp >= tau:
                    break  # sorted, rest is >= tau too
                merged.add(fp)
    return SampleView(cnt, sorted(merged))


class RangeSketch:
    """Sampled sketch whose range-enabled attributes carry dyadic ladders."""

    def __init__(self, params: SketchParams, schema: Schema):
        if schema.attribute_count != params.attribute_count:
            raise SchemaMismatch(
                f"schema has {schema.attribute_count} attributes, params say {params.attribute_count}"
            )
        self.params = params
        self.schema = schema
        seed = params.master_seed
        self.rid_hasher = RidHasher(derive_seed(seed, 0), params.bits)
        self.ladders: list[list[AttributeGrid]] = []
        for i, spec in enumerate(schema.attributes, start=1):
            if spec.range_enabled:
                levels = [
                    AttributeGrid(
                        params.w,
                        params.d,
                        params.capacity,
                        [derive_seed(seed, i, j, k) for j in range(1, params.d + 1)],
                    )
                    for k in range(spec.domain_bits)
                ]
            else:
                levels = [
                    AttributeGrid(
                        params.w,
                        params.d,
                        params.capacity,
                        [derive_seed(seed, i, j) for j in range(1, params.d + 1)],
                    )
                ]
            self.ladders.append(levels)
        self.n = 0

    @property
    def attribute_count(self) -> int:
        return self.params.attribute_count

    def _check_value(self, i: int, value: int) -> None:
        spec = self.schema.attributes[i - 1]
        if spec.domain_size is not None and not 1 <= value <= spec.domain_size:
            raise OutOfDomain(
                f"attribute {i}: value {value} outside domain [1, {spec.domain_size}]"
            )

    def insert(self, record: Record) -> None:
        if len(record.values) != self.attribute_count:
            raise SchemaMismatch(
                f"record has {len(record.values)} values, sketch expects {self.attribute_count}"
            )
        fp = self.rid_hasher.fingerprint(record.rid)
        for i, value in enumerate(record.values, start=1):
            self._check_value(i, value)
            spec = self.schema.attributes[i - 1]
            levels = self.ladders[i - 1]
            if spec.range_enabled:
                for k, grid in enumerate(levels):
                    grid.insert((value - 1) >> k, fp)
            else:
                levels[0].insert(value, fp)
        self.n += 1

    def insert_many(self, rids: np.ndarray, values: np.ndarray) -> None:
        values = np.ascontiguousarray(values, dtype=np.uint64)
        if values.ndim != 2 or values.shape[1] != self.attribute_count:
            raise SchemaMismatch(
                f"value matrix must be (n, {self.attribute_count}), got {values.shape}"
            )
        fps = self.rid_hasher.fingerprints(rids)
        for i, spec in enumerate(self.schema.attributes, start=1):
            column = values[:, i - 1]
            if spec.domain_size is not None and column.size:
                if int(column.min()) < 1 or int(column.max()) > spec.domain_size:
                    raise OutOfDomain(
                        f"attribute {i}: values outside domain [1, {spec.domain_size}]"
                    )
            levels = self.ladders[i - 1]
            if spec.range_enabled:
                shifted = column - np.uint64(1)
                for k, grid in enumerate(levels):
                    grid.insert_many(shifted >> np.uint64(k), fps)
            else:
                levels[0].insert_many(column, fps)
        self.n += values.shape[0]

    def _piece_cells(self, i: int, j: int, pieces: list[tuple[int, int]]):
        """Cell states for cover pieces on attribute i, row j."""
        levels = self.ladders[i - 1]
        states = []
        for k, x in pieces:
            grid = levels[k]
            col = grid.hashes[j].column(x) - 1
            states.append(grid.cell_state(j, col))
        return states

    def estimate(self, query: Query) -> Estimate:
        validate_query(query, self.schema)
        views: list[SampleView] = []
        constrained = 0
        for pred in query.predicates:
            i = pred.attribute
            spec = self.schema.attributes[i - 1]
            levels = self.ladders[i - 1]
            if isinstance(pred, Equals):
                if spec.range_enabled:
                    key = pred.value - 1  # level-0 dyadic key
                else:
                    key = pred.value
                constrained += 1
                for j in range(self.params.d):
                    views.append(levels[0].view(j, key))
            else:
                if not spec.range_enabled:
                    raise RangePredicateUnsupported(
                        f"attribute {i} is not range-enabled"
                    )
                pieces = canonical_cover(pred.lo, pred.hi, spec.domain_bits)
                if pieces == [(spec.domain_bits, 0)]:
                    # the full-domain piece matches every record; reading
                    # cells for it only adds collision noise, so it drops
                    # out of the intersection entirely
                    continue
                constrained += 1
                for j in range(self.params.d):
                    views.append(merge_views(self._piece_cells(i, j, pieces)))
        if constrained == 0:
            # every predicate spanned its whole domain: the answer is the
            # exact stream length, no sampling involved
            return Estimate(
                value=float(self.n),
                intersection_size=self.n,
                n_max=self.n,
                below_sanity=False,
            )
        return estimate_from_views(
            views,
            p=constrained,
            d=self.params.d,
            capacity=self.params.capacity,
            epsilon=self.params.epsilon,
            delta=self.params.delta,
        )

    def memory_model_bits(self) -> int:
        total_grids = sum(len(levels) for levels in self.ladders)
        return total_grids * model_bits(
            self.params.w, self.params.d, 1, self.params.capacity, self.params.bits
        )

    def memory_footprint_bits(self) -> int:
        from .sketch import _footprint_bits

        return _footprint_bits(g for levels in self.ladders for g in levels)
