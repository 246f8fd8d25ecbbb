"""Trace domain types and Jaeger-export batch parsing.

Wire format (must round-trip exactly): a top-level object with "data",
an array of traces. Each trace carries "traceID", "spans" and "processes".
Each span: "spanID", "operationName", "startTime" (µs since epoch, int),
"duration" (µs, int), "references" ([{"refType": "CHILD_OF" |
"FOLLOWS_FROM", "spanID": <parent>}]) and "processID" resolving into the
trace's "processes" map ({pid: {"serviceName": ...}}).

Malformed traces are skipped with a warning, never silently dropped and
never repaired. A child may start up to CLOCK_SKEW_US before its parent
(collector clock skew); larger skew is warned about but accepted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Optional, Union

from .errors import ParseError, TraceValidationError, UnsupportedFormatError

CLOCK_SKEW_US = 1000

_ESCAPES = (("%", "%25"), (":", "%3A"), ("/", "%2F"))


def _escape(part: str) -> str:
    for raw, enc in _ESCAPES:
        part = part.replace(raw, enc)
    return part


def _unescape(part: str) -> str:
    for raw, enc in reversed(_ESCAPES):
        part = part.replace(enc, raw)
    return part


class RefKind(str, Enum):
    """How a span relates to its parent."""

    ROOT = "root"
    CHILD = "sync"      # CHILD_OF: parent waits for the call
    FOLLOWS = "async"   # FOLLOWS_FROM: fire-and-forget

    @property
    def ref_type(self) -> str:
        return {RefKind.CHILD: "CHILD_OF", RefKind.FOLLOWS: "FOLLOWS_FROM"}[self]


@dataclass(frozen=True, order=True)
class RpcName:
    """Identity of an RPC: service plus operation.

    The canonical form "service:operation" contains exactly one structural
    separator; reserved characters inside either part are percent-escaped
    so canonical strings and "/"-joined paths stay unambiguous.
    """

    service: str
    operation: str

    def __post_init__(self):
        if not self.service or not self.operation:
            raise ValueError("RpcName parts must be non-empty")

    @property
    def canonical(self) -> str:
        return f"{_escape(self.service)}:{_escape(self.operation)}"

    @classmethod
    def parse(cls, text: str) -> "RpcName":
        service, sep, operation = text.partition(":")
        if not sep or not service or not operation:
            raise ValueError(f"not a canonical RPC name: {text!r}")
        return cls(_unescape(service), _unescape(operation))

    def __str__(self) -> str:
        return self.canonical


@dataclass(frozen=True)
class SpanRecord:
    """One timed RPC execution within a trace. Duration must be ≥ 0;
    ref_kind is ROOT iff parent_span_id is absent."""

    trace_id: str
    span_id: str
    rpc: RpcName
    parent_span_id: Optional[str]
    ref_kind: RefKind
    start_time: int   # µs since Unix epoch
    duration: int     # µs

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError(f"span {self.span_id}: negative duration")
        if (self.ref_kind is RefKind.ROOT) != (self.parent_span_id is None):
            raise ValueError(
                f"span {self.span_id}: ref_kind {self.ref_kind.value} inconsistent "
                "with parent_span_id"
            )


@dataclass(frozen=True)
class ParseWarning:
    trace_id: str
    reason: str

    def __str__(self) -> str:
        return f"trace {self.trace_id}: {self.reason}"


@dataclass
class Trace:
    """A validated single-rooted span tree. The end-to-end response time of
    the request is root.duration, exactly."""

    trace_id: str
    spans: tuple[SpanRecord, ...]
    root: SpanRecord
    _children: dict[str, tuple[SpanRecord, ...]] = field(repr=False, default_factory=dict)

    def children_of(self, span: SpanRecord) -> tuple[SpanRecord, ...]:
        return self._children.get(span.span_id, ())

    @property
    def response_time(self) -> int:
        return self.root.duration

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return self.trace_id == other.trace_id and sorted(
            self.spans, key=lambda s: s.span_id
        ) == sorted(other.spans, key=lambda s: s.span_id)


def validate_trace(spans: Iterable[SpanRecord], warnings: Optional[list] = None) -> Trace:
    """Resolve parent links over one trace's spans and identify the root.

    Raises TraceValidationError on: empty input, mixed trace ids, duplicate
    span ids, zero or multiple roots, unresolvable parents, parent cycles.
    Clock skew beyond CLOCK_SKEW_US only warns (appended to `warnings`).
    """
    spans = tuple(spans)
    if not spans:
        raise TraceValidationError("empty span list")
    trace_id = spans[0].trace_id
    if any(s.trace_id != trace_id for s in spans):
        raise TraceValidationError("spans do not share one trace_id")

    by_id: dict[str, SpanRecord] = {}
    for s in spans:
        if s.span_id in by_id:
            raise TraceValidationError(f"duplicate span_id {s.span_id}")
        by_id[s.span_id] = s

    roots = [s for s in spans if s.ref_kind is RefKind.ROOT]
    if len(roots) == 0:
        raise TraceValidationError("no root span")
    if len(roots) > 1:
        raise TraceValidationError("ambiguous root: multiple parentless spans")
    root = roots[0]

    children: dict[str, list[SpanRecord]] = {}
    for s in spans:
        if s.parent_span_id is None:
            continue
        parent = by_id.get(s.parent_span_id)
        if parent is None:
            raise TraceValidationError(f"orphan span {s.span_id}: parent not in trace")
        children.setdefault(parent.span_id, []).append(s)
        if warnings is not None and s.start_time < parent.start_time - CLOCK_SKEW_US:
            warnings.append(ParseWarning(
                trace_id, f"span {s.span_id} starts {parent.start_time - s.start_time}µs "
                          "before its parent (clock skew)"))

    # Cycle check: every span must reach the root by parent links.
    reached = {root.span_id}
    for s in spans:
        chain = []
        cur = s
        while cur.span_id not in reached:
            chain.append(cur.span_id)
            if cur.parent_span_id is None or len(chain) > len(spans):
                raise TraceValidationError("parent cycle detected")
            nxt = by_id[cur.parent_span_id]
            if nxt.span_id in chain:
                raise TraceValidationError("parent cycle detected")
            cur = nxt
        reached.update(chain)

    ordered = {pid: tuple(sorted(kids, key=lambda s: (s.start_time, s.span_id)))
               for pid, kids in children.items()}
    return Trace(trace_id=trace_id, spans=spans, root=root, _children=ordered)


def _span_from_dict(trace_id: str, raw: dict, services: dict) -> SpanRecord:
    refs = raw.get("references", [])
    parent_id = None
    kind = RefKind.ROOT
    if refs:
        ref = refs[0]
        parent_id = ref["spanID"]
        ref_type = ref.get("refType", "CHILD_OF")
        if ref_type == "CHILD_OF":
            kind = RefKind.CHILD
        elif ref_type == "FOLLOWS_FROM":
            kind = RefKind.FOLLOWS
        else:
            raise ValueError(f"unknown refType {ref_type!r}")
    service = services[raw["processID"]]
    return SpanRecord(
        trace_id=trace_id,
        span_id=raw["spanID"],
        rpc=RpcName(service, raw["operationName"]),
        parent_span_id=parent_id,
        ref_kind=kind,
        start_time=int(raw["startTime"]),
        duration=int(raw["duration"]),
    )


def parse_trace_batch(
    raw: Union[bytes, str, IO],
    format: str = "jaeger-export",
) -> tuple[list[Trace], list[ParseWarning]]:
    """Parse a trace batch document into validated traces.

    Every structurally recoverable trace is returned; malformed traces are
    skipped and reported in the warning list. A document-level syntax error
    is fatal (ParseError with byte offset); an unknown format tag raises
    UnsupportedFormatError.
    """
    if format != "jaeger-export":
        raise UnsupportedFormatError(f"unsupported trace format: {format!r}")
    if hasattr(raw, "read"):
        raw = raw.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid document: {e.msg} at offset {e.pos}", offset=e.pos) from e
    if not isinstance(doc, dict) or not isinstance(doc.get("data"), list):
        raise ParseError('document has no top-level "data" array')

    traces: list[Trace] = []
    warnings: list[ParseWarning] = []
    for entry in doc["data"]:
        trace_id = entry.get("traceID", "<missing traceID>") if isinstance(entry, dict) else "<bad entry>"
        try:
            if not isinstance(entry, dict):
                raise TraceValidationError("trace entry is not an object")
            processes = entry.get("processes", {})
            services = {pid: p["serviceName"] for pid, p in processes.items()}
            spans = [_span_from_dict(trace_id, s, services) for s in entry.get("spans", [])]
            traces.append(validate_trace(spans, warnings))
        except (TraceValidationError, ValueError, KeyError, TypeError) as e:
            warnings.append(ParseWarning(trace_id, str(e) or repr(e)))
    return traces, warnings


def serialize_traces(traces: Iterable[Trace]) -> dict:
    """Render traces back into the Jaeger export object shape.

    parse_trace_batch(json.dumps(serialize_traces(ts))) reproduces ts for
    any valid input (round-trip identity).
    """
    data = []
    for trace in traces:
        process_ids: dict[str, str] = {}
        spans_out = []
        for s in trace.spans:
            pid = process_ids.get(s.rpc.service)
            if pid is None:
                pid = f"p{len(process_ids) + 1}"
                process_ids[s.rpc.service] = pid
            refs = []
            if s.parent_span_id is not None:
                refs.append({"refType": s.ref_kind.ref_type, "spanID": s.parent_span_id})
            spans_out.append({
                "spanID": s.span_id,
                "operationName": s.rpc.operation,
                "startTime": s.start_time,
                "duration": s.duration,
                "references": refs,
                "processID": pid,
            })
        data.append({
            "traceID": trace.trace_id,
            "spans": spans_out,
            "processes": {pid: {"serviceName": svc} for svc, pid in process_ids.items()},
        })
    return {"data": data}
