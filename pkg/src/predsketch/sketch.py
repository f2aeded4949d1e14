"""Sampled count sketch for conjunctive equality predicates.

Layout: one grid per attribute, each grid w columns by d rows. Row j of
every grid hashes an attribute value to one column, so a record touches
exactly d cells per attribute. Each cell keeps an offer count plus a
bounded sample of the B smallest record fingerprints routed to it
(kminwise.Cell semantics). A conjunctive query collects the p*d cells its
predicate values hash to, intersects their samples, and scales the match
count by the worst-case sampling rate among the queried cells:

    estimate = max_c(cnt_c / |S_c|) * |intersection|

which reduces to (n_max / B) * |intersection| when every queried cell is
full and is exact when no cell ever overflowed its sample.

Estimates whose intersection is smaller than the sanity threshold
3*log2(4*p*d*sqrt(B)/delta)/eps^2 are flagged below_sanity and carry a
conservative fallback bound instead of a trustworthy value.

configure() solves for the largest sample capacity B that fits a caller
budget of M bits under the cost model

    M >= w * d * A * (32 + B * (b + 3*32 + 1)),   b = ceil(log2(4*B^2.5/delta))

charging each cell 32 bits of counter plus, per sampled fingerprint, its
b bits and three 32-bit pointers plus one color bit for a balanced-tree
node. Feasibility is monotone decreasing in B, so integer bisection with
lo = 1 and hi = M/(w*d*A) + 1 finds the maximum.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import (
    BudgetTooSmall,
    ConfigError,
    DuplicateAttribute,
    EmptyQuery,
    EpsilonOutOfRange,
    InvalidEpsilonDelta,
    RangePredicateUnsupported,
    SchemaMismatch,
    UnknownAttribute,
)
from .hashing import RidHasher, RowHash, derive_seed
from .intersect import multiway_intersect
from .kminwise import INF_THRESHOLD
from .model import Equals, Estimate, Query, Record

__all__ = [
    "SketchParams",
    "configure",
    "AttributeGrid",
    "SampleView",
    "SampledSketch",
    "estimate_from_views",
    "model_bits",
]

_SENT = np.uint64(INF_THRESHOLD)
# budget cost model: per sampled entry, b fingerprint bits + 3 pointers + 1 bit
_ENTRY_OVERHEAD_BITS = 3 * 32 + 1
_CELL_BITS = 32


def _fingerprint_bits(capacity: int, delta: float) -> int:
    # b = ceil(log2(4 * B^2.5 / delta)), computed in log space
    return math.ceil(math.log2(4.0 / delta) + 2.5 * math.log2(capacity))


def model_bits(w: int, d: int, attribute_count: int, capacity: int, bits: int) -> int:
    per_cell = _CELL_BITS + capacity * (bits + _ENTRY_OVERHEAD_BITS)
    return w * d * attribute_count * per_cell


@dataclass(frozen=True)
class SketchParams:
    """Resolved sketch dimensions plus the accuracy targets they came from."""

    epsilon: float
    delta: float
    memory_bits: int
    attribute_count: int
    w: int
    d: int
    capacity: int  # B, max sample size per cell
    bits: int  # b, fingerprint width
    master_seed: int = 0

    @property
    def eps1(self) -> float:
        return self.epsilon

    @property
    def eps2(self) -> float:
        return (self.epsilon / (1.0 + self.epsilon)) ** (1.0 / self.d)

    @property
    def delta1(self) -> float:
        return self.delta / 2.0

    @property
    def delta2(self) -> float:
        return self.delta / 2.0

    def with_seed(self, seed: int) -> "SketchParams":
        return replace(self, master_seed=seed)

    @classmethod
    def explicit(
        cls,
        epsilon: float,
        delta: float,
        capacity: int,
        attribute_count: int,
        master_seed: int = 0,
        w: int | None = None,
        d: int | None = None,
    ) -> "SketchParams":
        """Build params from a chosen capacity instead of a memory budget."""
        _check_accuracy(epsilon, delta)
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity}")
        d = d if d is not None else math.ceil(math.log(2.0 / delta))
        w = w if w is not None else 1 + math.ceil(math.e * ((1.0 + epsilon) / epsilon) ** (1.0 / d))
        bits = _fingerprint_bits(capacity, delta)
        if bits > 63:
            raise ConfigError(f"fingerprint width {bits} exceeds 63 bits")
        return cls(
            epsilon=epsilon,
            delta=delta,
            memory_bits=model_bits(w, d, attribute_count, capacity, bits),
            attribute_count=attribute_count,
            w=w,
            d=d,
            capacity=capacity,
            bits=bits,
            master_seed=master_seed,
        )


def _check_accuracy(epsilon: float, delta: float) -> None:
    if not 0.0 < delta < 1.0:
        raise InvalidEpsilonDelta(f"delta must be in (0, 1), got {delta}")
    if epsilon <= 0.0:
        raise InvalidEpsilonDelta(f"epsilon must be positive, got {epsilon}")
    if epsilon >= 0.25:
        raise EpsilonOutOfRange(f"epsilon must be below 0.25, got {epsilon}")


def configure(
    epsilon: float,
    delta: float,
    memory_bits: int,
    attribute_count: int,
    master_seed: int = 0,
    grid_count: int | None = None,
) -> SketchParams:
    """Solve for the largest per-cell sample capacity within a bit budget.

    grid_count overrides the number of grids charged against the budget;
    range-enabled schemas pay one grid per ladder level, not one per
    attribute.
    """
    _check_accuracy(epsilon, delta)
    if attribute_count < 1:
        raise ConfigError(f"attribute_count must be >= 1, got {attribute_count}")
    if memory_bits < 1:
        raise BudgetTooSmall(f"memory budget must be positive, got {memory_bits}")
    grids = attribute_count if grid_count is None else grid_count

    d = math.ceil(math.log(2.0 / delta))
    w = 1 + math.ceil(math.e * ((1.0 + epsilon) / epsilon) ** (1.0 / d))

    def feasible(capacity: int) -> bool:
        bits = _fingerprint_bits(capacity, delta)
        return model_bits(w, d, grids, capacity, bits) <= memory_bits

    if not feasible(1):
        raise BudgetTooSmall(
            f"{memory_bits} bits cannot hold capacity-1 cells at w={w}, d={d}, "
            f"grids={grids}"
        )
    lo = 1
    hi = memory_bits // (w * d * grids) + 1  # cost(hi) > budget always
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    bits = _fingerprint_bits(lo, delta)
    if bits > 63:
        raise ConfigError(f"fingerprint width {bits} exceeds 63 bits; shrink the budget")
    return SketchParams(
        epsilon=epsilon,
        delta=delta,
        memory_bits=memory_bits,
        attribute_count=attribute_count,
        w=w,
        d=d,
        capacity=lo,
        bits=bits,
        master_seed=master_seed,
    )


@dataclass
class SampleView:
    """What the estimator needs from one (possibly merged) queried cell."""

    cnt: int
    values: Sequence[int]


class AttributeGrid:
    """d x w grid of counting K-min cells for one keyed dimension.

    State is struct-of-arrays: numpy counters and thresholds plus plain
    sorted lists for the samples. insert_many() is the vectorized path; it
    commits counts with bincount, then replays real admission only for
    records whose fingerprint beats the cell threshold as of the batch
    start. Thresholds only decrease, so that candidate set is a superset of
    the true admissions and the replay (which re-checks the live threshold)
    lands in exactly the state sequential inserts would produce.
    """

    __slots__ = ("w", "d", "capacity", "cnt", "smax", "samples", "hashes", "probes")

    def __init__(self, w: int, d: int, capacity: int, row_seeds: Sequence[int]):
        if len(row_seeds) != d:
            raise ConfigError("need one seed per row")
        self.w = w
        self.d = d
        self.capacity = capacity
        self.cnt = np.zeros((d, w), dtype=np.uint64)
        self.smax = np.full((d, w), _SENT, dtype=np.uint64)
        self.samples: list[list[list[int]]] = [[[] for _ in range(w)] for _ in range(d)]
        self.hashes = [RowHash(seed, w) for seed in row_seeds]
        self.probes = 0

    def _admit(self, j: int, col: int, fp: int) -> None:
        # cnt is the caller's job; this is the sample side only. probes
        # counts comparisons: 1 threshold check, plus the ~log2(|S|) bisect
        # comparisons when the fingerprint beats the threshold.
        self.probes += 1
        if fp >= self.smax[j, col]:
            return
        values = self.samples[j][col]
        self.probes += max(1, len(values)).bit_length()
        lo = bisect_left(values, fp)
        if lo < len(values) and values[lo] == fp:
            return
        if len(values) >= self.capacity:
            values.pop()
        values.insert(lo, fp)
        if len(values) == self.capacity:
            self.smax[j, col] = np.uint64(values[-1])

    def insert(self, value: int, fp: int) -> None:
        for j, h in enumerate(self.hashes):
            col = h.column(value) - 1
            self.cnt[j, col] += np.uint64(1)
            self._admit(j, col, fp)

    def insert_many(self, values: np.ndarray, fps: np.ndarray) -> None:
        for j, h in enumerate(self.hashes):
            cols = h.columns(values)
            self.cnt[j] += np.bincount(cols, minlength=self.w).astype(np.uint64)
            hot = np.nonzero(fps < self.smax[j][cols])[0]
            if hot.size:
                hot_cols = cols[hot]
                hot_fps = fps[hot]
                for t in range(hot.size):
                    self._admit(j, int(hot_cols[t]), int(hot_fps[t]))

    def view(self, j: int, value: int) -> SampleView:
        col = self.hashes[j].column(value) - 1
        return SampleView(int(self.cnt[j, col]), self.samples[j][col])

    def cell_state(self, j: int, col: int) -> tuple[int, list[int], int]:
        values = self.samples[j][col]
        return int(self.cnt[j, col]), values, int(self.smax[j, col])


def estimate_from_views(
    views: Sequence[SampleView],
    p: int,
    d: int,
    capacity: int,
    epsilon: float,
    delta: float,
) -> Estimate:
    """Shared estimator core over one view per (predicate, row)."""
    n_max = max((v.cnt for v in views), default=0)
    log_term = math.log2(4.0 * p * d * math.sqrt(capacity) / delta)
    threshold = 3.0 * log_term / (epsilon * epsilon)
    fallback = 2.0 * n_max * log_term / (capacity * epsilon * epsilon)

    result = multiway_intersect([v.values for v in views])
    matched = len(result.common)
    if matched == 0:
        value = 0.0
    else:
        scale = max(v.cnt / len(v.values) for v in views)
        value = scale * matched
    return Estimate(
        value=value,
        intersection_size=matched,
        n_max=n_max,
        below_sanity=matched < threshold,
        sanity_threshold=threshold,
        fallback_value=fallback,
    )


class SampledSketch:
    """Equality-predicate count sketch; one AttributeGrid per attribute."""

    def __init__(self, params: SketchParams):
        self.params = params
        seed = params.master_seed
        self.rid_hasher = RidHasher(derive_seed(seed, 0), params.bits)
        self.grids = [
            AttributeGrid(
                params.w,
                params.d,
                params.capacity,
                [derive_seed(seed, i, j) for j in range(1, params.d + 1)],
            )
            for i in range(1, params.attribute_count + 1)
        ]
        self.n = 0

    @property
    def attribute_count(self) -> int:
        return self.params.attribute_count

    def insert(self, record: Record) -> None:
        if len(record.values) != self.attribute_count:
            raise SchemaMismatch(
                f"record has {len(record.values)} values, sketch expects {self.attribute_count}"
            )
        fp = self.rid_hasher.fingerprint(record.rid)
        for grid, value in zip(self.grids, record.values):
            grid.insert(value, fp)
        self.n += 1

    def insert_many(self, rids: np.ndarray, values: np.ndarray) -> None:
        """Vectorized ingest of a (n, attribute_count) value matrix."""
        values = np.ascontiguousarray(values, dtype=np.uint64)
        if values.ndim != 2 or values.shape[1] != self.attribute_count:
            raise SchemaMismatch(
                f"value matrix must be (n, {self.attribute_count}), got {values.shape}"
            )
        fps = self.rid_hasher.fingerprints(rids)
        for i, grid in enumerate(self.grids):
            grid.insert_many(values[:, i], fps)
        self.n += values.shape[0]

    def _queried_views(self, query: Query) -> list[SampleView]:
        check_equality_query(query, self.attribute_count)
        views = []
        for pred in query.predicates:
            grid = self.grids[pred.attribute - 1]
            for j in range(self.params.d):
                views.append(grid.view(j, pred.value))
        return views

    def estimate(self, query: Query) -> Estimate:
        views = self._queried_views(query)
        return estimate_from_views(
            views,
            p=query.p,
            d=self.params.d,
            capacity=self.params.capacity,
            epsilon=self.params.epsilon,
            delta=self.params.delta,
        )

    def memory_model_bits(self) -> int:
        return model_bits(
            self.params.w,
            self.params.d,
            self.attribute_count,
            self.params.capacity,
            self.params.bits,
        )

    def memory_footprint_bits(self) -> int:
        return _footprint_bits(self.grids)


def check_equality_query(query: Query, attribute_count: int) -> None:
    if query.p == 0:
        raise EmptyQuery("query has no predicates")
    seen: set[int] = set()
    for pred in query.predicates:
        if not isinstance(pred, Equals):
            raise RangePredicateUnsupported(
                f"attribute {pred.attribute}: this sketch answers equality predicates only"
            )
        if pred.attribute in seen:
            raise DuplicateAttribute(f"attribute {pred.attribute} appears twice")
        if not 1 <= pred.attribute <= attribute_count:
            raise UnknownAttribute(f"attribute index {pred.attribute} not in [1, {attribute_count}]")
        seen.add(pred.attribute)


def _footprint_bits(grids) -> int:
    # storage model: numpy arrays at true size, 36 bytes per sampled entry
    # (CPython int + list slot), 72 bytes per cell container
    total_bytes = 0
    for grid in grids:
        total_bytes += grid.cnt.nbytes + grid.smax.nbytes
        for row in grid.samples:
            for values in row:
                total_bytes += 72 + 36 * len(values)
    return total_bytes * 8
