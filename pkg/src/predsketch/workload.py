"""Synthetic streams, query workloads, and the benchmark loop.

Streams draw each attribute independently from a per-attribute
distribution (uniform, or Zipf via inverse-CDF over a truncated domain).
Query workloads are built the way a user would probe real data: sample a
small fraction of stream records, and for each sampled record and each
predicate count p, form queries from p randomly chosen attributes with
that record's values. Every generated query therefore matches at least
one record, and duplicates are dropped.

run_benchmark replays a query list against named estimators, scoring each
against the exact oracle with the normalized error sum |f_hat - f| / (N * |Q|)
and recording per-query latency. Reports serialize via the report module.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .errors import InvalidSpec, SchemaMismatch
from .model import Equals, Estimate, Query, Record
from .oracle import RecordStore

__all__ = [
    "Zipf",
    "Uniform",
    "StreamSpec",
    "Stream",
    "generate_stream",
    "generate_queries",
    "generate_range_queries",
    "EstimatorHandle",
    "EstimatorStats",
    "BenchmarkReport",
    "run_benchmark",
]


@dataclass(frozen=True)
class Zipf:
    alpha: float
    domain: int


@dataclass(frozen=True)
class Uniform:
    domain: int


Distribution = Union[Zipf, Uniform]


@dataclass(frozen=True)
class StreamSpec:
    n: int
    attributes: tuple[Distribution, ...]
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise InvalidSpec(f"stream length must be >= 0, got {self.n}")
        if not self.attributes:
            raise InvalidSpec("need at least one attribute distribution")
        for i, dist in enumerate(self.attributes, start=1):
            if dist.domain < 2:
                raise InvalidSpec(f"attribute {i}: domain must be >= 2, got {dist.domain}")
            if isinstance(dist, Zipf) and dist.alpha <= 0.0:
                raise InvalidSpec(f"attribute {i}: zipf alpha must be > 0, got {dist.alpha}")

    @property
    def attribute_count(self) -> int:
        return len(self.attributes)


@dataclass
class Stream:
    """Materialized stream: rids 1..n and an (n, A) value matrix."""

    rids: np.ndarray
    values: np.ndarray
    spec: StreamSpec | None = None

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def attribute_count(self) -> int:
        return int(self.values.shape[1])

    def records(self):
        for rid, row in zip(self.rids, self.values):
            yield Record(int(rid), tuple(int(v) for v in row))

    def to_store(self) -> RecordStore:
        return RecordStore.from_arrays(self.rids, self.values)


def _zipf_column(rng: np.random.Generator, n: int, dist: Zipf) -> np.ndarray:
    ranks = np.arange(1, dist.domain + 1, dtype=np.float64)
    weights = ranks ** (-dist.alpha)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf[-1] = 1.0  # guard against accumulated rounding
    draws = np.searchsorted(cdf, rng.random(n), side="right") + 1
    return np.minimum(draws, dist.domain).astype(np.uint64)


def generate_stream(spec: StreamSpec) -> Stream:
    """Deterministic per (spec, seed): same spec, same bytes."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    columns = []
    for dist in spec.attributes:
        if isinstance(dist, Uniform):
            columns.append(rng.integers(1, dist.domain + 1, size=n, dtype=np.uint64))
        else:
            columns.append(_zipf_column(rng, n, dist))
    values = np.column_stack(columns)
    return Stream(rids=np.arange(1, n + 1, dtype=np.uint64), values=values, spec=spec)


def generate_queries(
    stream: Stream,
    sample_rate: float = 0.0005,
    p_min: int = 2,
    p_max: int | None = None,
    per_record_per_p: int = 10,
    seed: int = 0,
    min_samples: int = 1,
) -> list[Query]:
    """Record-derived equality workload; each query matches >= 1 record."""
    attribute_count = stream.attribute_count
    if p_max is None:
        p_max = attribute_count
    if not 1 <= p_min <= p_max <= attribute_count:
        raise InvalidSpec(f"bad predicate counts [{p_min}, {p_max}] for {attribute_count} attributes")
    if not 0.0 < sample_rate <= 1.0:
        raise InvalidSpec(f"sample rate must be in (0, 1], got {sample_rate}")
    rng = np.random.default_rng(seed)
    n = len(stream)
    n_samples = max(min_samples, int(round(sample_rate * n)))
    picks = rng.choice(n, size=min(n_samples, n), replace=False)
    seen: dict[tuple, Query] = {}
    for idx in picks:
        row = stream.values[int(idx)]
        for p in range(p_min, p_max + 1):
            for _ in range(per_record_per_p):
                attrs = rng.choice(attribute_count, size=p, replace=False)
                key = tuple(sorted((int(a) + 1, int(row[int(a)])) for a in attrs))
                if key not in seen:
                    seen[key] = Query([Equals(a, v) for a, v in key])
    return list(seen.values())


def generate_range_queries(
    stream: Stream,
    attributes: Sequence[int],
    domain_bits: int,
    count: int,
    p: int = 1,
    seed: int = 0,
) -> list[Query]:
    """Random closed intervals over range-enabled attributes (1-based)."""
    from .model import InRange

    if p < 1 or p > len(attributes):
        raise InvalidSpec(f"cannot pick {p} attributes from {len(attributes)}")
    rng = np.random.default_rng(seed)
    size = 1 << domain_bits
    queries = []
    for _ in range(count):
        attrs = rng.choice(len(attributes), size=p, replace=False)
        preds = []
        for a in attrs:
            lo = int(rng.integers(1, size + 1))
            hi = int(rng.integers(lo, size + 1))
            preds.append(InRange(attributes[int(a)], lo, hi))
        queries.append(Query(preds))
    return queries


@dataclass
class EstimatorHandle:
    """A named estimate() callable plus its build-time bookkeeping."""

    name: str
    estimate: Callable[[Query], Estimate]
    attribute_count: int
    memory_bits: int = 0
    ingest_seconds: float = 0.0


@dataclass
class EstimatorStats:
    name: str
    query_count: int
    abs_error_sum: float | None  # None when no oracle was supplied
    per_p_error: dict[int, float] | None
    per_p_count: dict[int, int]
    latencies_us: list[float]
    memory_bits: int
    ingest_rps: float

    def mean_error(self, stream_n: int) -> float | None:
        if self.abs_error_sum is None or self.query_count == 0:
            return None
        return self.abs_error_sum / (stream_n * self.query_count)

    def p_error(self, p: int, stream_n: int) -> float | None:
        if self.per_p_error is None or self.per_p_count.get(p, 0) == 0:
            return None
        return self.per_p_error[p] / (stream_n * self.per_p_count[p])

    def latency_stats(self) -> tuple[float, float, float]:
        if not self.latencies_us:
            return (0.0, 0.0, 0.0)
        arr = np.asarray(self.latencies_us)
        return (
            float(arr.mean()),
            float(np.percentile(arr, 50)),
            float(np.percentile(arr, 95)),
        )


@dataclass
class PerQueryRow:
    index: int
    query: Query
    p: int
    f_true: int | None
    estimates: dict[str, float]
    latencies_us: dict[str, float]


@dataclass
class BenchmarkReport:
    stream_n: int
    query_count: int
    timing: bool
    has_oracle: bool
    estimators: list[EstimatorStats] = field(default_factory=list)
    per_query: list[PerQueryRow] = field(default_factory=list)


def run_benchmark(
    stream: Stream,
    queries: Sequence[Query],
    estimators: Sequence[EstimatorHandle],
    oracle: RecordStore | None = None,
    timing: bool = True,
    keep_per_query: bool = True,
) -> BenchmarkReport:
    stream_n = len(stream)
    for handle in estimators:
        if handle.attribute_count != stream.attribute_count:
            raise SchemaMismatch(
                f"estimator {handle.name}: built for {handle.attribute_count} attributes, "
                f"stream has {stream.attribute_count}"
            )
    stats = {
        h.name: EstimatorStats(
            name=h.name,
            query_count=0,
            abs_error_sum=0.0 if oracle is not None else None,
            per_p_error={} if oracle is not None else None,
            per_p_count={},
            latencies_us=[],
            memory_bits=h.memory_bits,
            # wall-clock derived, so zeroed when timing is off to keep report
            # bytes reproducible across runs
            ingest_rps=(stream_n / h.ingest_seconds)
            if timing and h.ingest_seconds > 0
            else 0.0,
        )
        for h in estimators
    }
    report = BenchmarkReport(
        stream_n=stream_n,
        query_count=len(queries),
        timing=timing,
        has_oracle=oracle is not None,
    )
    for qi, query in enumerate(queries):
        f_true = oracle.count(query) if oracle is not None else None
        row = PerQueryRow(qi, query, query.p, f_true, {}, {})
        for handle in estimators:
            st = stats[handle.name]
            if timing:
                t0 = time.perf_counter()
                est = handle.estimate(query)
                elapsed_us = (time.perf_counter() - t0) * 1e6
            else:
                est = handle.estimate(query)
                elapsed_us = 0.0
            st.query_count += 1
            st.per_p_count[query.p] = st.per_p_count.get(query.p, 0) + 1
            if timing:
                st.latencies_us.append(elapsed_us)
            if f_true is not None:
                err = abs(est.value - f_true)
                st.abs_error_sum += err
                st.per_p_error[query.p] = st.per_p_error.get(query.p, 0.0) + err
            row.estimates[handle.name] = est.value
            row.latencies_us[handle.name] = elapsed_us
        if keep_per_query:
            report.per_query.append(row)
    report.estimators = [stats[h.name] for h in estimators]
    return report
