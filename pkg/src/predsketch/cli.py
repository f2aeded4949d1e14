"""Command line interface.

Subcommands: configure (solve sketch dimensions for a budget), ingest
(CSV stream -> snapshot), query (estimate against a snapshot), bench
(synthetic stream + workload -> CSV report and figures).

Exit codes: 0 success, 2 parse errors (bad CSV, query strings, spec
files), 3 configuration errors (budgets, epsilon/delta, domains), 4
runtime errors (schema mismatches, unknown attributes, bad snapshots).
The environment variable OMNI_SEED, when set, overrides --seed everywhere.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import report as report_mod
from .errors import (
    ConfigError,
    OutOfDomain,
    ParseError,
    PredsketchError,
    RuntimeUsageError,
    SchemaMismatch,
)
from .model import Schema, schema_from_dict, schema_to_dict, validate_query
from .oracle import RecordStore
from .queryfmt import format_query, parse_query
from .ranges import RangeSketch
from .ridlist import RidListSketch
from .sketch import SampledSketch, configure
from .snapshot import load as load_snapshot
from .snapshot import save as save_snapshot
from .workload import (
    EstimatorHandle,
    StreamSpec,
    Uniform,
    Zipf,
    generate_queries,
    generate_stream,
    run_benchmark,
)

_MEMORY_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(B|KB|MB|GB)?\s*$", re.IGNORECASE)
_BATCH = 1 << 16
# dictionary codes for non-integer tokens start here; lookups of tokens never
# seen at ingest map to _MISS_CODE, which no record carries in practice
_DICT_BASE = 10**12
_MISS_CODE = _DICT_BASE - 1

ESTIMATOR_NAMES = ("s0min", "s0cap", "s1")


def parse_memory(text: str) -> int:
    """'10MB' -> bits. Suffixes are powers of 1024; bare numbers are bytes."""
    m = _MEMORY_RE.match(text)
    if not m:
        raise ParseError(f"cannot parse memory size {text!r}")
    scale = {"B": 1, "KB": 1 << 10, "MB": 1 << 20, "GB": 1 << 30}[
        (m.group(2) or "B").upper()
    ]
    bits = int(float(m.group(1)) * scale * 8)
    if bits <= 0:
        raise ParseError(f"memory size {text!r} is empty")
    return bits


def resolve_seed(flag_value: int | None, fallback: int | None = None) -> int:
    env = os.environ.get("OMNI_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ParseError(f"OMNI_SEED={env!r} is not an integer") from None
    if flag_value is not None:
        return flag_value
    return fallback if fallback is not None else 0


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise RuntimeUsageError(f"cannot read {what} {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what} {path!r}: {exc}") from exc


def load_schema_file(path: str) -> Schema:
    return schema_from_dict(_load_json(path, "schema"))


def load_stream_spec(path: str) -> StreamSpec:
    data = _load_json(path, "stream spec")
    attrs = []
    for i, item in enumerate(data.get("attributes", []), start=1):
        dist = item.get("dist", "uniform").lower()
        if dist == "zipf":
            attrs.append(Zipf(alpha=float(item.get("alpha", 1.0)), domain=int(item["domain"])))
        elif dist == "uniform":
            attrs.append(Uniform(domain=int(item["domain"])))
        else:
            raise ParseError(f"attribute {i}: unknown distribution {dist!r}")
    try:
        return StreamSpec(
            n=int(data["n"]), attributes=tuple(attrs), seed=int(data.get("seed", 0))
        )
    except KeyError as exc:
        raise ParseError(f"stream spec missing field {exc}") from exc


class _Encoder:
    """Per-attribute dictionary encoding for non-integer categorical tokens."""

    def __init__(self, schema: Schema):
        self.schema = schema
        self.tables: list[dict[str, int]] = [{} for _ in schema.attributes]

    def encode(self, attr_index: int, token: str, line: int) -> int:
        spec = self.schema.attributes[attr_index - 1]
        if token.isdigit():
            value = int(token)
        elif spec.kind == "numeric":
            raise ParseError(f"attribute {spec.name!r}: non-integer value {token!r}", line)
        else:
            table = self.tables[attr_index - 1]
            value = table.get(token)
            if value is None:
                value = _DICT_BASE + len(table)
                table[token] = value
            return value
        if spec.domain_size is not None and not 1 <= value <= spec.domain_size:
            raise OutOfDomain(
                f"line {line}: attribute {spec.name!r}: {value} outside [1, {spec.domain_size}]"
            )
        return value

    def lookup(self, attr_index: int, token: str) -> int:
        # query-side: unseen tokens map to a code no record carries
        return self.tables[attr_index - 1].get(token, _MISS_CODE)

    def decode(self, attr_index: int, value: int) -> str:
        for token, code in self.tables[attr_index - 1].items():
            if code == value:
                return token
        return str(value)

    def to_meta(self) -> dict:
        return {
            self.schema.attributes[i].name: table
            for i, table in enumerate(self.tables)
            if table
        }

    @classmethod
    def from_meta(cls, schema: Schema, meta: dict) -> "_Encoder":
        enc = cls(schema)
        for name, table in (meta or {}).items():
            idx = schema.index_of(name)
            enc.tables[idx - 1] = {str(k): int(v) for k, v in table.items()}
        return enc


def _iter_csv_batches(path: str, schema: Schema, encoder: _Encoder):
    """Yield (rids, values) numpy batches from a records CSV."""
    attribute_count = schema.attribute_count
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise RuntimeUsageError(f"cannot read records {path!r}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("records file is empty", 1) from None
        has_rid = bool(header) and header[0].strip().lower() == "rid"
        expected = attribute_count + (1 if has_rid else 0)
        if len(header) != expected:
            raise SchemaMismatch(
                f"header has {len(header)} columns, schema expects {expected} "
                f"({'with' if has_rid else 'without'} rid)"
            )
        rids: list[int] = []
        rows: list[list[int]] = []
        auto_rid = 0
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != expected:
                raise ParseError(f"expected {expected} fields, got {len(row)}", line_no)
            if has_rid:
                token = row[0].strip()
                if not token.isdigit():
                    raise ParseError(f"rid {token!r} is not an unsigned integer", line_no)
                rid = int(token)
                fields = row[1:]
            else:
                auto_rid += 1
                rid = auto_rid
                fields = row
            rids.append(rid)
            rows.append(
                [encoder.encode(i + 1, tok.strip(), line_no) for i, tok in enumerate(fields)]
            )
            if len(rows) >= _BATCH:
                yield np.asarray(rids, dtype=np.uint64), np.asarray(rows, dtype=np.uint64)
                rids, rows = [], []
        if rows:
            yield np.asarray(rids, dtype=np.uint64), np.asarray(rows, dtype=np.uint64)


def _grid_count(schema: Schema) -> int:
    return sum(
        spec.domain_bits if spec.range_enabled else 1 for spec in schema.attributes
    )


# -- subcommands ------------------------------------------------------------

def cmd_configure(args) -> int:
    memory_bits = parse_memory(args.memory)
    seed = resolve_seed(args.seed)
    params = configure(args.epsilon, args.delta, memory_bits, args.attrs, seed)
    payload = {
        "epsilon": params.epsilon,
        "delta": params.delta,
        "memory_bits": params.memory_bits,
        "attributes": params.attribute_count,
        "w": params.w,
        "d": params.d,
        "B": params.capacity,
        "b": params.bits,
        "eps1": params.eps1,
        "eps2": params.eps2,
        "delta1": params.delta1,
        "delta2": params.delta2,
        "seed": params.master_seed,
    }
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(
            f"w={params.w} d={params.d} B={params.capacity} b={params.bits} "
            f"(budget {memory_bits} bits for {args.attrs} attributes)"
        )
        print(f"eps1={params.eps1:.6g} eps2={params.eps2:.6g} delta1={params.delta1:.6g}")
    return 0


def cmd_ingest(args) -> int:
    schema = load_schema_file(args.schema)
    memory_bits = parse_memory(args.memory)
    seed = resolve_seed(args.seed, schema.master_seed)
    params = configure(
        args.epsilon,
        args.delta,
        memory_bits,
        schema.attribute_count,
        seed,
        grid_count=_grid_count(schema),
    )
    use_ranges = any(spec.range_enabled for spec in schema.attributes)
    sketch = RangeSketch(params, schema) if use_ranges else SampledSketch(params)
    encoder = _Encoder(schema)
    t0 = time.perf_counter()
    total = 0
    for rids, values in _iter_csv_batches(args.records, schema, encoder):
        sketch.insert_many(rids, values)
        total += len(rids)
    elapsed = time.perf_counter() - t0
    if total == 0:
        raise ParseError("records file has a header but no rows", 2)
    meta = {"schema": schema_to_dict(schema), "encodings": encoder.to_meta()}
    save_snapshot(sketch, args.snapshot, meta)
    rps = total / elapsed if elapsed > 0 else 0.0
    print(
        f"ingested {total} records in {elapsed:.2f}s ({rps:,.0f} rec/s), "
        f"w={params.w} d={params.d} B={params.capacity} b={params.bits}"
    )
    print(f"snapshot written to {args.snapshot}")
    return 0


def _display_query(query, schema, encoder) -> str:
    if schema is None or encoder is None:
        return format_query(query, schema)
    from .model import Equals

    parts = []
    for pred in query.predicates:
        name = schema.attributes[pred.attribute - 1].name
        if isinstance(pred, Equals):
            parts.append(f"{name}={encoder.decode(pred.attribute, pred.value)}")
        else:
            parts.append(f"{name} IN [{pred.lo},{pred.hi}]")
    return " AND ".join(parts)


def cmd_query(args) -> int:
    sketch, meta = load_snapshot(args.snapshot)
    schema = schema_from_dict(meta["schema"]) if "schema" in meta else None
    encoder = (
        _Encoder.from_meta(schema, meta.get("encodings", {})) if schema is not None else None
    )
    query = parse_query(
        args.query,
        schema,
        resolve_value=encoder.lookup if encoder is not None else None,
    )
    if schema is not None:
        validate_query(query, schema)
    est = sketch.estimate(query)
    if args.json:
        print(
            json.dumps(
                {
                    "query": _display_query(query, schema, encoder),
                    "estimate": est.value,
                    "intersection_size": est.intersection_size,
                    "n_max": est.n_max,
                    "below_sanity": est.below_sanity,
                    "sanity_threshold": est.sanity_threshold,
                    "fallback_value": est.fallback_value,
                },
                sort_keys=True,
            )
        )
    else:
        print(f"query: {_display_query(query, schema, encoder)}")
        print(f"estimate={est.value:.6g} intersection={est.intersection_size} n_max={est.n_max}")
        if est.below_sanity:
            print(
                f"below sanity threshold ({est.intersection_size} < "
                f"{est.sanity_threshold:.3g}); fallback bound {est.fallback_value:.6g}"
            )
    return 0


def _build_estimators(names, stream, args, seed) -> list[EstimatorHandle]:
    attribute_count = stream.attribute_count
    handles: list[EstimatorHandle] = []
    s0 = None
    if "s0min" in names or "s0cap" in names:
        s0 = RidListSketch(attribute_count, args.epsilon, args.delta, seed)
        t0 = time.perf_counter()
        s0.insert_many(stream.rids, stream.values)
        s0_secs = time.perf_counter() - t0
    if "s0min" in names:
        handles.append(
            EstimatorHandle(
                "s0min", s0.estimate_min, attribute_count, s0.memory_model_bits(), s0_secs
            )
        )
    if "s0cap" in names:
        handles.append(
            EstimatorHandle(
                "s0cap", s0.estimate_intersect, attribute_count, s0.memory_model_bits(), s0_secs
            )
        )
    if "s1" in names:
        params = configure(
            args.epsilon, args.delta, parse_memory(args.memory), attribute_count, seed
        )
        sk = SampledSketch(params)
        t0 = time.perf_counter()
        sk.insert_many(stream.rids, stream.values)
        s1_secs = time.perf_counter() - t0
        handles.append(
            EstimatorHandle("s1", sk.estimate, attribute_count, sk.memory_model_bits(), s1_secs)
        )
    return handles


def cmd_bench(args) -> int:
    spec = load_stream_spec(args.stream_spec)
    names = [tok.strip() for tok in args.estimators.split(",") if tok.strip()]
    for name in names:
        if name not in ESTIMATOR_NAMES:
            raise ParseError(
                f"unknown estimator {name!r}; choose from {', '.join(ESTIMATOR_NAMES)}"
            )
    if not names:
        raise ParseError("no estimators requested")
    seed = resolve_seed(args.seed)
    stream = generate_stream(spec)
    queries = generate_queries(
        stream,
        sample_rate=args.sample_rate,
        p_min=args.p_min,
        p_max=args.p_max,
        per_record_per_p=args.queries_per_record,
        seed=seed,
    )
    handles = _build_estimators(names, stream, args, seed)
    oracle = None if args.no_oracle else stream.to_store()
    bench = run_benchmark(
        stream, queries, handles, oracle=oracle, timing=not args.no_timing
    )
    out = Path(args.out)
    report_mod.write_report_csv(bench, out)
    written = [out]
    if args.queries_out:
        written.append(report_mod.write_per_query_csv(bench, Path(args.queries_out)))
    if not args.no_figures:
        written.extend(report_mod.render_figures(bench, out))
    print(f"stream n={len(stream)}, {len(queries)} queries, estimators: {', '.join(names)}")
    for st in bench.estimators:
        mean_err = st.mean_error(len(stream))
        err_txt = f"mean_err={mean_err:.3g}" if mean_err is not None else "mean_err=n/a"
        mean_lat, p50, p95 = st.latency_stats()
        print(
            f"  {st.name}: {err_txt} memory_bits={st.memory_bits} "
            f"p50_lat={p50:.0f}us p95_lat={p95:.0f}us"
        )
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="predsketch",
        description="Approximate multi-attribute predicate counts over record streams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("configure", help="solve sketch dimensions for a memory budget")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--memory", required=True, help="budget, e.g. 10MB (powers of 1024)")
    p.add_argument("--attrs", type=int, required=True, help="number of attributes")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_configure)

    p = sub.add_parser("ingest", help="build a sketch from a records CSV")
    p.add_argument("records", help="CSV with header rid,a1,...,ak (rid optional)")
    p.add_argument("--schema", required=True, help="schema JSON file")
    p.add_argument("--snapshot", required=True, help="output snapshot path")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--memory", default="10MB")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", help="estimate a conjunctive count from a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("query", help="e.g. \"a3=17 AND a1 IN [4,99]\"")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="benchmark estimators on a synthetic stream")
    p.add_argument("--stream-spec", required=True, help="stream spec JSON file")
    p.add_argument("--estimators", default="s1", help="comma list: s0min,s0cap,s1")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--memory", default="10MB", help="budget for the s1 estimator")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sample-rate", type=float, default=0.0005)
    p.add_argument("--p-min", type=int, default=2)
    p.add_argument("--p-max", type=int, default=None)
    p.add_argument("--queries-per-record", type=int, default=10)
    p.add_argument("--out", default="report.csv")
    p.add_argument("--queries-out", default=None, help="optional per-query CSV")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--no-timing", action="store_true", help="deterministic output bytes")
    p.add_argument("--no-oracle", action="store_true", help="skip exact counts")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except RuntimeUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except PredsketchError as exc:  # any stragglers count as runtime errors
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:  # unreadable/missing files outside the wrapped loaders
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
