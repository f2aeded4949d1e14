"""Ground-truth layer: the exact store is checked against a second,
independently written scan (see conftest.pure_scan), and the sample oracle
against hand cases."""

import numpy as np

from predsketch import (
    INF_THRESHOLD,
    Equals,
    InRange,
    Query,
    Record,
    RecordStore,
    kmin_oracle,
)
from conftest import pure_scan, uniform_stream


def test_empty_store_counts_zero():
    store = RecordStore(3)
    assert store.count(Query([Equals(1, 5)])) == 0


def test_replicated_record_counts_multiplicity():
    store = RecordStore(2)
    for rid in (1, 2, 3):
        store.append(Record(rid, (4, 9)))
    store.append(Record(4, (4, 8)))
    assert store.count(Query([Equals(1, 4), Equals(2, 9)])) == 3


def test_count_matches_independent_scan_on_random_data():
    stream = uniform_stream(5000, 4, 40, seed=3)
    store = stream.to_store()
    records = list(stream.records())
    rng = np.random.default_rng(17)
    for _ in range(60):
        p = int(rng.integers(1, 5))
        attrs = rng.choice(4, size=p, replace=False) + 1
        preds = []
        for a in attrs:
            if rng.random() < 0.5:
                preds.append(Equals(int(a), int(rng.integers(1, 41))))
            else:
                lo = int(rng.integers(1, 41))
                hi = int(rng.integers(lo, 41))
                preds.append(InRange(int(a), lo, hi))
        q = Query(preds)
        assert store.count(q) == pure_scan(records, q)


def test_count_is_order_insensitive():
    stream = uniform_stream(800, 3, 10, seed=5)
    records = list(stream.records())
    store_fwd = RecordStore(3)
    store_rev = RecordStore(3)
    for rec in records:
        store_fwd.append(rec)
    for rec in reversed(records):
        store_rev.append(rec)
    q = Query([Equals(1, 3), InRange(2, 2, 7)])
    assert store_fwd.count(q) == store_rev.count(q)


def test_matching_rids_agree_with_count():
    stream = uniform_stream(2000, 3, 12, seed=9)
    store = stream.to_store()
    records = {rec.rid: rec for rec in stream.records()}
    q = Query([Equals(2, 4), InRange(3, 1, 6)])
    rids = store.matching_rids(q)
    assert len(rids) == store.count(q)
    for rid in rids:
        rec = records[int(rid)]
        assert rec.value(2) == 4 and 1 <= rec.value(3) <= 6


def test_from_arrays_equals_append_loop():
    stream = uniform_stream(500, 2, 8, seed=1)
    by_arrays = RecordStore.from_arrays(stream.rids, stream.values)
    by_loop = RecordStore(2)
    for rec in stream.records():
        by_loop.append(rec)
    q = Query([Equals(1, 2)])
    assert by_arrays.count(q) == by_loop.count(q)
    assert len(by_arrays.records) == len(by_loop.records) == 500


def test_kmin_oracle_hand_cases():
    assert kmin_oracle([9, 3, 7], 4) == (3, [3, 7, 9], INF_THRESHOLD)
    assert kmin_oracle([5, 5, 5], 2) == (3, [5], INF_THRESHOLD)
    assert kmin_oracle([9, 4, 7, 2, 9], 3) == (5, [2, 4, 7], 7)
    assert kmin_oracle([], 3) == (0, [], INF_THRESHOLD)
