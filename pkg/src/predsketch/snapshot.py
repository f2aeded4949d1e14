"""Versioned binary snapshots of sketches.

Layout (all integers little-endian, fixed width):

    magic "PSKS" | u16 version | u8 kind        kind 0 = SampledSketch, 1 = RangeSketch
    f64 epsilon | f64 delta | u64 memory_bits
    u32 attribute_count | u32 w | u16 d | u64 capacity | u16 bits
    u64 master_seed | u64 n
    u32 meta_len | meta_len bytes of UTF-8 JSON   schema + value encodings
    per grid, in attribute (then ladder level) order:
        per cell, row-major: u64 cnt | u32 sample_len | sample_len * u64 fingerprints

Samples are stored sorted, thresholds are recomputed on load (last sample
value when full, sentinel otherwise), and hash functions are re-derived
from the master seed, so a loaded sketch reproduces the original's
estimates bit for bit.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import SnapshotFormatError
from .kminwise import INF_THRESHOLD
from .model import Schema, schema_from_dict, schema_to_dict
from .ranges import RangeSketch
from .sketch import AttributeGrid, SampledSketch, SketchParams

MAGIC = b"PSKS"
VERSION = 1

_HEADER = struct.Struct("<4sHB")
_PARAMS = struct.Struct("<ddQIIHQHQQ")
_CELL_HEAD = struct.Struct("<QI")

__all__ = ["MAGIC", "VERSION", "save", "load"]


def _iter_grids(sketch) -> list[AttributeGrid]:
    if isinstance(sketch, RangeSketch):
        return [g for levels in sketch.ladders for g in levels]
    return list(sketch.grids)


def save(sketch, path: str | Path, meta: dict | None = None) -> Path:
    """Write a SampledSketch or RangeSketch; meta rides along as JSON."""
    path = Path(path)
    params = sketch.params
    kind = 1 if isinstance(sketch, RangeSketch) else 0
    payload = dict(meta or {})
    if kind == 1:
        payload["schema"] = schema_to_dict(sketch.schema)
    meta_bytes = json.dumps(payload, sort_keys=True).encode("utf-8")

    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, kind))
        fh.write(
            _PARAMS.pack(
                params.epsilon,
                params.delta,
                params.memory_bits,
                params.attribute_count,
                params.w,
                params.d,
                params.capacity,
                params.bits,
                params.master_seed,
                sketch.n,
            )
        )
        fh.write(struct.pack("<I", len(meta_bytes)))
        fh.write(meta_bytes)
        for grid in _iter_grids(sketch):
            for j in range(grid.d):
                cnt_row = grid.cnt[j]
                for col in range(grid.w):
                    values = grid.samples[j][col]
                    fh.write(_CELL_HEAD.pack(int(cnt_row[col]), len(values)))
                    if values:
                        fh.write(np.asarray(values, dtype="<u8").tobytes())
    return path


def _read_exact(fh, size: int) -> bytes:
    data = fh.read(size)
    if len(data) != size:
        raise SnapshotFormatError("snapshot truncated")
    return data


def _load_grid(fh, grid: AttributeGrid) -> None:
    for j in range(grid.d):
        for col in range(grid.w):
            cnt, m = _CELL_HEAD.unpack(_read_exact(fh, _CELL_HEAD.size))
            if m > grid.capacity:
                raise SnapshotFormatError("cell sample larger than capacity")
            grid.cnt[j, col] = np.uint64(cnt)
            if m:
                raw = np.frombuffer(_read_exact(fh, 8 * m), dtype="<u8")
                values = [int(v) for v in raw]
                if values != sorted(set(values)):
                    raise SnapshotFormatError("cell sample not sorted/distinct")
                grid.samples[j][col] = values
            # threshold is derived state: last sample value iff full
            grid.smax[j, col] = (
                np.uint64(grid.samples[j][col][-1])
                if m == grid.capacity
                else np.uint64(INF_THRESHOLD)
            )


def load(path: str | Path):
    """Read a snapshot; returns (sketch, meta_dict)."""
    path = Path(path)
    with path.open("rb") as fh:
        magic, version, kind = _HEADER.unpack(_read_exact(fh, _HEADER.size))
        if magic != MAGIC:
            raise SnapshotFormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise SnapshotFormatError(f"unsupported snapshot version {version}")
        if kind not in (0, 1):
            raise SnapshotFormatError(f"unknown sketch kind {kind}")
        (
            epsilon,
            delta,
            memory_bits,
            attribute_count,
            w,
            d,
            capacity,
            bits,
            master_seed,
            n,
        ) = _PARAMS.unpack(_read_exact(fh, _PARAMS.size))
        (meta_len,) = struct.unpack("<I", _read_exact(fh, 4))
        try:
            meta = json.loads(_read_exact(fh, meta_len).decode("utf-8")) if meta_len else {}
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise SnapshotFormatError(f"bad meta block: {exc}") from exc
        params = SketchParams(
            epsilon=epsilon,
            delta=delta,
            memory_bits=memory_bits,
            attribute_count=attribute_count,
            w=w,
            d=d,
            capacity=capacity,
            bits=bits,
            master_seed=master_seed,
        )
        if kind == 1:
            if "schema" not in meta:
                raise SnapshotFormatError("range snapshot missing schema")
            schema = schema_from_dict(meta["schema"])
            sketch = RangeSketch(params, schema)
        else:
            sketch = SampledSketch(params)
        for grid in _iter_grids(sketch):
            _load_grid(fh, grid)
        extra = fh.read(1)
        if extra:
            raise SnapshotFormatError("trailing bytes after grids")
        sketch.n = n
    return sketch, meta
