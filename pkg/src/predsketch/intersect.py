"""Multiway intersection of sorted sequences by leapfrogging seeks.

Inputs are visited round-robin starting from the smallest one. A candidate
value is confirmed once every input seeks to it exactly; any miss promotes
the missed-past value to the new candidate and restarts the agreement count.
Each seek resumes from the input's previous cursor, so a k-way intersection
costs O(k * |smallest| * log |largest|) comparisons instead of materializing
pairwise intersections.

probes counts lower-bound seeks, the unit used by the work-bound tests.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Sequence

__all__ = ["IntersectionResult", "multiway_intersect"]


@dataclass
class IntersectionResult:
    common: list[int]
    probes: int


def multiway_intersect(inputs: Sequence[Sequence[int]]) -> IntersectionResult:
    """Intersect k >= 1 ascending sequences; duplicates are emitted once."""
    if not inputs:
        raise ValueError("need at least one input")
    arrays = sorted(inputs, key=len)
    if len(arrays[0]) == 0:
        return IntersectionResult([], 0)
    k = len(arrays)
    if k == 1:
        seen = list(dict.fromkeys(arrays[0]))
        return IntersectionResult(seen, 0)

    cursors = [0] * k
    common: list[int] = []
    probes = 0
    candidate = arrays[0][0]
    agree = 1
    idx = 0
    while True:
        idx = (idx + 1) % k
        arr = arrays[idx]
        pos = bisect_left(arr, candidate, cursors[idx])
        probes += 1
        if pos == len(arr):
            break
        cursors[idx] = pos
        if arr[pos] == candidate:
            agree += 1
            if agree == k:
                common.append(candidate)
                # advance past the match (and any duplicates of it)
                pos = bisect_right(arr, candidate, pos)
                if pos == len(arr):
                    break
                cursors[idx] = pos
                candidate = arr[pos]
                agree = 1
        else:
            candidate = arr[pos]
            agree = 1
    return IntersectionResult(common, probes)
