"""Batch preprocessing: reconstruct every RPC execution path in a trace.

Sibling invocations of the same RPC under the same parent collapse into
one path; per-trace execution time is the arithmetic mean over those
occurrences, so the root path's value equals the end-to-end response time.
The emitted path set is prefix-closed and occurrence counts over all paths
sum to the trace's span count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import TraceValidationError
from .model import ParseWarning, RefKind, RpcName, SpanRecord, Trace, parse_trace_batch

MAX_PATH_DEPTH = 128


@dataclass(frozen=True, order=True)
class PathKey:
    """An RPC execution path: the RpcName sequence from the root down.

    Canonical form joins element canonicals with "/". The same RPC at two
    depths (recursion) yields two distinct keys.
    """

    elements: tuple[RpcName, ...]

    def __post_init__(self):
        if not self.elements:
            raise ValueError("PathKey must be non-empty")

    @property
    def canonical(self) -> str:
        return "/".join(e.canonical for e in self.elements)

    @property
    def root_rpc(self) -> RpcName:
        return self.elements[0]

    @property
    def depth(self) -> int:
        return len(self.elements)

    def child(self, rpc: RpcName) -> "PathKey":
        return PathKey(self.elements + (rpc,))

    def parent(self) -> Optional["PathKey"]:
        if len(self.elements) == 1:
            return None
        return PathKey(self.elements[:-1])

    @classmethod
    def parse(cls, text: str) -> "PathKey":
        return cls(tuple(RpcName.parse(part) for part in text.split("/")))

    def __str__(self) -> str:
        return self.canonical


@dataclass(frozen=True)
class PathRecord:
    """One (trace × execution path) observation: how often the path ran in
    the request and the mean execution time of those runs."""

    path: PathKey
    trace_id: str
    occurrences: int
    exec_time_mean: float  # µs
    timestamp: int         # µs epoch, root span start
    kind: str              # root | sync | async | mixed

    def __post_init__(self):
        if self.occurrences < 1:
            raise ValueError("occurrences must be ≥ 1")
        if self.exec_time_mean < 0:
            raise ValueError("exec_time_mean must be ≥ 0")

    @property
    def root_rpc(self) -> RpcName:
        return self.path.root_rpc


@dataclass(frozen=True)
class E2ERecord:
    """One trace's end-to-end response time (the root span's duration)."""

    root_rpc: RpcName
    trace_id: str
    response_time: int  # µs
    timestamp: int      # µs epoch

    def __post_init__(self):
        if self.response_time < 0:
            raise ValueError("response_time must be ≥ 0")


def _edge_kind(spans: Sequence[SpanRecord]) -> str:
    kinds = {s.ref_kind for s in spans}
    if kinds == {RefKind.ROOT}:
        return "root"
    if kinds == {RefKind.CHILD}:
        return "sync"
    if kinds == {RefKind.FOLLOWS}:
        return "async"
    return "mixed"


def extract_paths(trace: Trace) -> tuple[list[PathRecord], E2ERecord]:
    """Emit one PathRecord per distinct execution path in the trace plus
    the trace's E2ERecord. Raises TraceValidationError past MAX_PATH_DEPTH."""
    groups: dict[PathKey, list[SpanRecord]] = {}
    order: list[PathKey] = []

    def walk(span: SpanRecord, path: PathKey):
        if path.depth > MAX_PATH_DEPTH:
            raise TraceValidationError(
                f"path depth exceeds {MAX_PATH_DEPTH} in trace {trace.trace_id}")
        if path not in groups:
            groups[path] = []
            order.append(path)
        groups[path].append(span)
        for child in trace.children_of(span):
            walk(child, path.child(child.rpc))

    root_path = PathKey((trace.root.rpc,))
    walk(trace.root, root_path)

    ts = trace.root.start_time
    records = [
        PathRecord(
            path=path,
            trace_id=trace.trace_id,
            occurrences=len(spans),
            exec_time_mean=sum(s.duration for s in spans) / len(spans),
            timestamp=ts,
            kind=_edge_kind(spans),
        )
        for path, spans in ((p, groups[p]) for p in order)
    ]
    e2e = E2ERecord(
        root_rpc=trace.root.rpc,
        trace_id=trace.trace_id,
        response_time=trace.root.duration,
        timestamp=ts,
    )
    return records, e2e


@dataclass
class PreprocessSummary:
    traces_ok: int = 0
    traces_skipped: int = 0
    records_written: int = 0
    elapsed: float = 0.0

    def as_dict(self) -> dict:
        return {
            "traces_ok": self.traces_ok,
            "traces_skipped": self.traces_skipped,
            "records_written": self.records_written,
            "elapsed_seconds": round(self.elapsed, 3),
        }


def preprocess_batch(inputs, store, warnings_out: Optional[list] = None) -> PreprocessSummary:
    """Parse trace batch files and append their records to the store.

    `inputs` is an iterable of filesystem paths (Jaeger export documents).
    Idempotent per trace_id: traces the store has already processed are
    skipped, so re-running over the same input does not duplicate records.
    """
    t0 = time.monotonic()
    summary = PreprocessSummary()
    for input_path in inputs:
        with open(input_path, "rb") as f:
            traces, warnings = parse_trace_batch(f)
        if warnings_out is not None:
            warnings_out.extend(warnings)
        # Clock-skew warnings accompany accepted traces; only count traces
        # that were actually dropped.
        parsed_ids = {t.trace_id for t in traces}
        summary.traces_skipped += len({w.trace_id for w in warnings} - parsed_ids)

        path_records: list[PathRecord] = []
        e2e_records: list[E2ERecord] = []
        seen_in_batch: set[str] = set()
        for trace in traces:
            if store.is_processed(trace.trace_id) or trace.trace_id in seen_in_batch:
                continue
            try:
                precs, e2e = extract_paths(trace)
            except TraceValidationError as e:
                summary.traces_skipped += 1
                if warnings_out is not None:
                    warnings_out.append(ParseWarning(trace.trace_id, str(e)))
                continue
            seen_in_batch.add(trace.trace_id)
            path_records.extend(precs)
            e2e_records.append(e2e)
        store.append_records(path_records, e2e_records)
        summary.traces_ok += len(e2e_records)
        summary.records_written += len(path_records) + len(e2e_records)
    summary.elapsed = time.monotonic() - t0
    return summary
