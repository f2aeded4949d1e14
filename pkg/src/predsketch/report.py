"""Serialize benchmark reports: delimited summaries, per-query dumps, figures.

CSV layout is versioned via a leading report_version column. Column sets
are conditional on what the run produced: error columns exist only when an
oracle scored the run, latency columns only when timing was enabled. With
timing disabled the bytes are a pure function of (stream spec, seeds,
estimator set), which is what the reproducibility tests pin down.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .queryfmt import format_query
from .workload import BenchmarkReport

REPORT_VERSION = 1

__all__ = ["REPORT_VERSION", "write_report_csv", "write_per_query_csv", "render_figures"]


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.10g}"


def write_report_csv(report: BenchmarkReport, path: str | Path) -> Path:
    """One row per (estimator, p) plus an 'all' summary row per estimator."""
    path = Path(path)
    header = ["report_version", "estimator", "p", "queries", "stream_n", "memory_bits", "ingest_rps"]
    if report.has_oracle:
        header.append("mean_abs_err_norm")
    if report.timing:
        header += ["mean_latency_us", "p50_latency_us", "p95_latency_us"]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for st in report.estimators:
            mean_lat, p50, p95 = st.latency_stats()
            for p in sorted(st.per_p_count):
                row = [
                    REPORT_VERSION,
                    st.name,
                    p,
                    st.per_p_count[p],
                    report.stream_n,
                    st.memory_bits,
                    _fmt(st.ingest_rps),
                ]
                if report.has_oracle:
                    row.append(_fmt(st.p_error(p, report.stream_n)))
                if report.timing:
                    lats = [
                        lat
                        for q, lat in zip(report.per_query, _lat_of(report, st.name))
                        if q.p == p
                    ]
                    row += [_fmt(v) for v in _lat_summary(lats)]
                writer.writerow(row)
            row = [
                REPORT_VERSION,
                st.name,
                "all",
                st.query_count,
                report.stream_n,
                st.memory_bits,
                _fmt(st.ingest_rps),
            ]
            if report.has_oracle:
                row.append(_fmt(st.mean_error(report.stream_n)))
            if report.timing:
                row += [_fmt(mean_lat), _fmt(p50), _fmt(p95)]
            writer.writerow(row)
    return path


def _lat_of(report: BenchmarkReport, name: str):
    return [row.latencies_us.get(name, 0.0) for row in report.per_query]


def _lat_summary(lats: Sequence[float]) -> tuple[float, float, float]:
    if not lats:
        return (0.0, 0.0, 0.0)
    arr = np.asarray(lats)
    return float(arr.mean()), float(np.percentile(arr, 50)), float(np.percentile(arr, 95))


def write_per_query_csv(report: BenchmarkReport, path: str | Path) -> Path:
    path = Path(path)
    names = [st.name for st in report.estimators]
    header = ["report_version", "index", "p", "query"]
    if report.has_oracle:
        header.append("f")
    for name in names:
        header.append(f"est_{name}")
        if report.timing:
            header.append(f"lat_us_{name}")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in report.per_query:
            out = [REPORT_VERSION, row.index, row.p, format_query(row.query)]
            if report.has_oracle:
                out.append(row.f_true)
            for name in names:
                out.append(_fmt(row.estimates.get(name)))
                if report.timing:
                    out.append(_fmt(row.latencies_us.get(name)))
            writer.writerow(out)
    return path


def render_figures(report: BenchmarkReport, csv_path: str | Path) -> list[Path]:
    """Write PNG figures next to the report CSV; returns the paths written."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    csv_path = Path(csv_path)
    written: list[Path] = []
    ps = sorted({p for st in report.estimators for p in st.per_p_count})

    if report.has_oracle and ps:
        fig, ax = plt.subplots(figsize=(6, 4))
        any_positive = False
        for st in report.estimators:
            ys = [st.p_error(p, report.stream_n) for p in ps]
            any_positive = any_positive or any(y is not None and y > 0 for y in ys)
            ax.plot(ps, ys, marker="o", label=st.name)
        ax.set_xlabel("predicates per query")
        ax.set_ylabel("mean |est - f| / N")
        if any_positive:  # log scale has nothing to show for all-exact runs
            ax.set_yscale("log")
        ax.set_xticks(ps)
        ax.legend()
        ax.set_title(f"estimation error, N={report.stream_n}")
        fig.tight_layout()
        out = csv_path.with_suffix(".error.png")
        fig.savefig(out, dpi=120)
        plt.close(fig)
        written.append(out)

    if report.timing and ps:
        fig, ax = plt.subplots(figsize=(6, 4))
        for st in report.estimators:
            per_p: dict[int, list[float]] = {p: [] for p in ps}
            for row in report.per_query:
                per_p[row.p].append(row.latencies_us.get(st.name, 0.0))
            ys = [sum(per_p[p]) / len(per_p[p]) if per_p[p] else 0.0 for p in ps]
            ax.plot(ps, ys, marker="s", label=st.name)
        ax.set_xlabel("predicates per query")
        ax.set_ylabel("mean latency (us)")
        ax.set_xticks(ps)
        ax.legend()
        ax.set_title("query latency")
        fig.tight_layout()
        out = csv_path.with_suffix(".latency.png")
        fig.savefig(out, dpi=120)
        plt.close(fig)
        written.append(out)

    return written
