"""Dyadic covers, merged cells, and the interval-predicate sketch."""

import numpy as np
import pytest

from predsketch import (
    INF_THRESHOLD,
    AttributeSpec,
    Equals,
    InRange,
    OutOfDomain,
    Query,
    RangePredicateUnsupported,
    RangeSketch,
    Record,
    SampledSketch,
    Schema,
    SketchParams,
    canonical_cover,
    merge_views,
)
from conftest import uniform_stream


def piece_span(level, key):
    return (key * (1 << level) + 1, (key + 1) * (1 << level))


def test_cover_hand_examples():
    assert canonical_cover(3, 10, 4) == [(1, 1), (2, 1), (1, 4)]
    assert canonical_cover(1, 16, 4) == [(4, 0)]
    assert canonical_cover(5, 5, 4) == [(0, 4)]


def test_cover_exhaustive_small_domains():
    for bits in range(1, 7):
        size = 1 << bits
        for lo in range(1, size + 1):
            for hi in range(lo, size + 1):
                pieces = canonical_cover(lo, hi, bits)
                assert len(pieces) <= 2 * bits or (lo, hi) == (1, size)
                covered = []
                for level, key in pieces:
                    start, end = piece_span(level, key)
                    covered.extend(range(start, end + 1))
                assert covered == list(range(lo, hi + 1)), (lo, hi, bits, pieces)


def test_cover_rejects_invalid_ranges():
    with pytest.raises(OutOfDomain):
        canonical_cover(0, 4, 4)
    with pytest.raises(OutOfDomain):
        canonical_cover(1, 17, 4)
    with pytest.raises(OutOfDomain):
        canonical_cover(9, 3, 4)


def test_merge_keeps_values_strictly_below_min_threshold():
    components = [
        (10, [1, 5, 9], 9),
        (7, [2, 9, 11], 11),
    ]
    view = merge_views(components)
    assert view.cnt == 17
    assert view.values == [1, 2, 5]  # 9 is at the min threshold, excluded


def test_merge_with_unfilled_component_uses_other_thresholds():
    components = [
        (4, [1, 5], INF_THRESHOLD),
        (9, [2, 6, 8], 8),
    ]
    view = merge_views(components)
    assert view.cnt == 13
    assert view.values == [1, 2, 5, 6]


def test_merge_of_unfilled_components_keeps_everything():
    components = [
        (2, [4, 7], INF_THRESHOLD),
        (1, [7], INF_THRESHOLD),
    ]
    view = merge_views(components)
    assert view.cnt == 3
    assert view.values == [4, 7]  # set union, duplicates collapse


def range_schema(domain_bits=4, seed=0):
    return Schema(
        (
            AttributeSpec("plain"),
            AttributeSpec("span", kind="numeric", domain_bits=domain_bits, range_enabled=True),
        ),
        master_seed=seed,
    )


def build_range_sketch(capacity=4096, domain_bits=4, seed=0):
    params = SketchParams.explicit(0.1, 0.1, capacity=capacity, attribute_count=2, master_seed=seed)
    return RangeSketch(params, range_schema(domain_bits, seed))


def test_one_record_lands_once_per_level_per_row():
    sk = build_range_sketch()
    sk.insert(Record(1, (7, 6)))
    ladder = sk.ladders[1]
    assert len(ladder) == 4
    for level, grid in enumerate(ladder):
        key = (6 - 1) >> level
        for j in range(sk.params.d):
            col = grid.hashes[j].column(key) - 1
            assert int(grid.cnt[j].sum()) == 1
            assert int(grid.cnt[j, col]) == 1
    assert len(sk.ladders[0]) == 1  # non-range attribute keeps a single grid


def test_level_counters_conserve_stream_length():
    sk = build_range_sketch()
    stream = uniform_stream(500, 2, 16, seed=3)
    sk.insert_many(stream.rids, stream.values)
    for grid in sk.ladders[1]:
        assert int(grid.cnt.sum()) == 500 * sk.params.d


def test_insert_validates_domain():
    sk = build_range_sketch(domain_bits=4)
    with pytest.raises(OutOfDomain):
        sk.insert(Record(1, (3, 0)))
    with pytest.raises(OutOfDomain):
        sk.insert(Record(1, (3, 17)))
    with pytest.raises(OutOfDomain):
        sk.insert_many(np.array([1]), np.array([[3, 17]], dtype=np.uint64))


def test_batch_ingest_equals_scalar_ingest():
    stream = uniform_stream(600, 2, 16, seed=5)
    batched = build_range_sketch(capacity=8, seed=4)
    batched.insert_many(stream.rids, stream.values)
    scalar = build_range_sketch(capacity=8, seed=4)
    for rec in stream.records():
        scalar.insert(rec)
    for lb, ls in zip(batched.ladders, scalar.ladders):
        for gb, gs in zip(lb, ls):
            assert np.array_equal(gb.cnt, gs.cnt)
            assert np.array_equal(gb.smax, gs.smax)
            assert gb.samples == gs.samples


def test_point_range_equals_equality_query():
    sk = build_range_sketch(seed=6)
    stream = uniform_stream(2000, 2, 16, seed=7)
    sk.insert_many(stream.rids, stream.values)
    for v in range(1, 17):
        a = sk.estimate(Query([InRange(2, v, v)]))
        b = sk.estimate(Query([Equals(2, v)]))
        assert a.value == b.value
        assert a.intersection_size == b.intersection_size


def test_full_domain_range_counts_whole_stream_when_unsampled():
    sk = build_range_sketch(seed=8)
    stream = uniform_stream(3000, 2, 16, seed=9)
    sk.insert_many(stream.rids, stream.values)
    est = sk.estimate(Query([InRange(2, 1, 16)]))
    assert est.value == 3000
    assert not est.below_sanity


def test_full_domain_predicate_drops_out_of_mixed_queries():
    # an interval spanning the whole domain matches everything, so it must
    # not disturb the other predicates' intersection with collision noise
    sk = build_range_sketch(seed=8)
    stream = uniform_stream(3000, 2, 16, seed=9)
    sk.insert_many(stream.rids, stream.values)
    mixed = sk.estimate(Query([Equals(1, 5), InRange(2, 1, 16)]))
    alone = sk.estimate(Query([Equals(1, 5)]))
    assert mixed.value == alone.value
    assert mixed.intersection_size == alone.intersection_size


def test_range_estimates_bounded_by_cover_collision_envelope():
    # Merged cells sum component counters, so hash collisions inside each of
    # the <= 2*log2(domain) cover pieces inflate the estimate but never
    # deflate it. Per-row collision mass is about e/(w-1) of the stream, so
    # the total overshoot stays within 2*log2(domain) * e/(w-1) * N.
    n, bits = 4000, 4
    stream = uniform_stream(n, 2, 1 << bits, seed=11)
    store = stream.to_store()
    for w in (None, 64):  # default w=8 is collision-heavy, w=64 is sparse
        params = SketchParams.explicit(
            0.1, 0.1, capacity=4096, attribute_count=2, master_seed=10, w=w
        )
        sk = RangeSketch(params, range_schema(bits, seed=10))
        sk.insert_many(stream.rids, stream.values)
        envelope = 2 * bits * (np.e / (params.w - 1)) * n
        rng = np.random.default_rng(12)
        worst = 0.0
        for _ in range(100):
            lo = int(rng.integers(1, (1 << bits) + 1))
            hi = int(rng.integers(lo, (1 << bits) + 1))
            q = Query([InRange(2, lo, hi)])
            truth = store.count(q)
            est = sk.estimate(q)
            assert est.value >= truth  # matching fingerprints all survive the merge
            worst = max(worst, est.value - truth)
        assert worst <= envelope, f"w={params.w}: overshoot {worst} > envelope {envelope}"


def test_mixed_equality_and_range_query():
    sk = build_range_sketch(seed=13)
    stream = uniform_stream(3000, 2, 16, seed=14)
    store = stream.to_store()
    sk.insert_many(stream.rids, stream.values)
    rng = np.random.default_rng(15)
    for _ in range(40):
        row = stream.values[int(rng.integers(0, 3000))]
        lo = int(rng.integers(1, int(row[1]) + 1))
        hi = int(rng.integers(int(row[1]), 17))
        q = Query([Equals(1, int(row[0])), InRange(2, lo, hi)])
        assert sk.estimate(q).value >= store.count(q)


def test_range_predicate_on_plain_attribute_rejected():
    sk = build_range_sketch()
    sk.insert(Record(1, (3, 4)))
    with pytest.raises(RangePredicateUnsupported):
        sk.estimate(Query([InRange(1, 1, 2)]))


def test_equality_on_range_attribute_reads_level_zero():
    sk = build_range_sketch(seed=16)
    values = np.array([[2, 6], [3, 6], [4, 7]], dtype=np.uint64)
    sk.insert_many(np.array([1, 2, 3], dtype=np.uint64), values)
    assert sk.estimate(Query([Equals(2, 6)])).value == 2
    assert sk.estimate(Query([Equals(2, 7)])).value == 1
    assert sk.estimate(Query([Equals(2, 8)])).value == 0


def test_memory_model_charges_every_ladder_level():
    sk = build_range_sketch(capacity=4, domain_bits=4)
    per_grid = sk.memory_model_bits() // 5  # 1 plain grid + 4 ladder levels
    single = SampledSketch(
        SketchParams.explicit(0.1, 0.1, capacity=4, attribute_count=1)
    ).memory_model_bits()
    assert per_grid == single
