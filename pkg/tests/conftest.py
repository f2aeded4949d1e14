"""Shared helpers for the test suite.

pure_scan is an independently written linear scan used to cross-check
RecordStore.count: it iterates Record objects and evaluates predicates with
plain Python comparisons, sharing no code with the numpy mask path.
"""

from __future__ import annotations

import numpy as np
import pytest

from predsketch import Equals, InRange, Query, Record
from predsketch.workload import Stream, StreamSpec, Uniform, Zipf, generate_stream


def pure_scan(records, query: Query) -> int:
    """Reference count: plain-Python predicate evaluation over records."""
    hits = 0
    for rec in records:
        for pred in query.predicates:
            v = rec.values[pred.attribute - 1]
            if isinstance(pred, Equals):
                if v != pred.value:
                    break
            elif not (pred.lo <= v <= pred.hi):
                break
        else:
            hits += 1
    return hits


def uniform_stream(n: int, attribute_count: int, domain: int, seed: int = 0) -> Stream:
    spec = StreamSpec(n=n, attributes=tuple(Uniform(domain) for _ in range(attribute_count)), seed=seed)
    return generate_stream(spec)


def zipf_stream(n: int, attribute_count: int, domain: int, alpha: float, seed: int = 0) -> Stream:
    spec = StreamSpec(n=n, attributes=tuple(Zipf(alpha, domain) for _ in range(attribute_count)), seed=seed)
    return generate_stream(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240807)
