"""Aggregated call tree over a (root RPC, time range) selection.

One node per execution path present in at least one analyzed request.
Each node carries two attribute series over the traces containing the
path: invocation frequency per request and mean execution time per
request (µs). Traces lacking the path contribute no entry (support
semantics); the root node's execution series therefore equals the
end-to-end response times of the selection.

Trees can be built from record streams (build_tree) or from the store's
dictionary-coded columns (build_tree_coded, used by the serving path);
the two routes are cross-checked for equality in tests. Node series stay
in numpy arrays; trace ids decode lazily since most views only need
per-row positions into the selection's e2e order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Union

import numpy as np

from .errors import EmptySelectionError, UnknownPathError
from .paths import E2ERecord, PathKey, PathRecord

_KIND_NAMES = {0: "root", 1: "sync", 2: "async", 3: "mixed"}


class AttributeKind(str, Enum):
    EXECUTION_TIME = "execution-time"
    FREQUENCY = "frequency"


@dataclass
class TreeNode:
    path: PathKey
    kind: str
    timestamps: np.ndarray           # int64, per containing trace
    freq: np.ndarray                 # occurrences per containing trace
    exec_mean: np.ndarray            # mean execution time per containing trace, µs
    trace_rows: np.ndarray           # row into the selection's e2e order
    children: list[PathKey] = field(default_factory=list)
    _trace_table: Optional[np.ndarray] = None
    _trace_codes: Optional[np.ndarray] = None
    _trace_ids: Optional[list] = None

    @property
    def support(self) -> int:
        return len(self.freq)

    @property
    def trace_ids(self) -> list[str]:
        if self._trace_ids is None:
            self._trace_ids = [str(t) for t in self._trace_table[self._trace_codes]]
        return self._trace_ids

    def values(self, attr: AttributeKind) -> np.ndarray:
        return self.exec_mean if attr is AttributeKind.EXECUTION_TIME else self.freq


@dataclass
class AggregatedTree:
    root: PathKey
    nodes: dict[str, TreeNode]   # keyed by canonical path
    request_count: int

    def node(self, path: Union[PathKey, str]) -> TreeNode:
        key = path.canonical if isinstance(path, PathKey) else path
        try:
            return self.nodes[key]
        except KeyError:
            raise UnknownPathError(f"no such path in tree: {key}") from None

    def walk(self) -> Iterable[TreeNode]:
        """Nodes in depth-first order, children in canonical order."""
        stack = [self.root.canonical]
        while stack:
            node = self.nodes[stack.pop()]
            yield node
            stack.extend(c.canonical for c in reversed(node.children))


def _merge_kind(a: str, b: str) -> str:
    return a if a == b else "mixed"


def build_tree(
    path_records: Iterable[PathRecord],
    e2e_records: Iterable[E2ERecord],
) -> AggregatedTree:
    """Aggregate per-trace path records into the call tree.

    All records must share one root RPC. Raises EmptySelectionError when
    the e2e stream is empty; ValueError if a non-root path's parent is
    missing from the record set (prefix closure violated upstream) or a
    path record references a trace with no e2e record.
    """
    e2e = sorted(e2e_records, key=lambda r: (r.timestamp, r.trace_id))
    if not e2e:
        raise EmptySelectionError("no requests in selection")
    root_rpc = e2e[0].root_rpc
    if any(r.root_rpc != root_rpc for r in e2e):
        raise ValueError("e2e records span multiple roots")
    row_by_trace = {r.trace_id: i for i, r in enumerate(e2e)}

    series: dict[str, dict] = {}
    for rec in path_records:
        if rec.root_rpc != root_rpc:
            raise ValueError("path records span multiple roots")
        if rec.trace_id not in row_by_trace:
            raise ValueError(
                f"path record for trace {rec.trace_id} has no e2e record")
        key = rec.path.canonical
        entry = series.get(key)
        if entry is None:
            entry = series[key] = {"path": rec.path, "kind": rec.kind, "rows": []}
        else:
            entry["kind"] = _merge_kind(entry["kind"], rec.kind)
        entry["rows"].append(
            (rec.timestamp, rec.trace_id, rec.occurrences, rec.exec_time_mean))

    root_key = PathKey((root_rpc,)).canonical
    if root_key not in series:
        raise EmptySelectionError("selection has e2e records but no path records")

    nodes: dict[str, TreeNode] = {}
    for key, entry in series.items():
        rows = sorted(entry["rows"])
        nodes[key] = TreeNode(
            path=entry["path"],
            kind=entry["kind"],
            timestamps=np.array([r[0] for r in rows], dtype=np.int64),
            freq=np.array([r[2] for r in rows], dtype=np.int64),
            exec_mean=np.array([r[3] for r in rows], dtype=np.float64),
            trace_rows=np.array([row_by_trace[r[1]] for r in rows], dtype=np.int64),
            _trace_ids=[r[1] for r in rows],
        )
    _link_children(nodes, root_key)
    return AggregatedTree(root=nodes[root_key].path, nodes=nodes, request_count=len(e2e))


def build_tree_coded(paths: dict, e2e: dict) -> AggregatedTree:
    """Columnar fast path over the store's dictionary-coded query results;
    same tree as build_tree on the equivalent record streams."""
    n_e2e = len(e2e["trace_code"])
    if n_e2e == 0:
        raise EmptySelectionError("no requests in selection")
    if len(paths["path_code"]) == 0:
        raise EmptySelectionError("selection has e2e records but no path records")

    # Row position of every e2e trace, then of every path row's trace.
    e2e_row_of_code = np.full(len(e2e["trace_table"]), -1, dtype=np.int64)
    e2e_row_of_code[e2e["trace_code"]] = np.arange(n_e2e)
    table_map = np.searchsorted(e2e["trace_table"], paths["trace_table"])
    table_map = np.clip(table_map, 0, len(e2e["trace_table"]) - 1)
    if not np.array_equal(e2e["trace_table"][table_map], paths["trace_table"]):
        raise ValueError("path records reference traces with no e2e record")
    rows_all = e2e_row_of_code[table_map[paths["trace_code"]]]
    if rows_all.min() < 0:
        raise ValueError("path records reference traces with no e2e record")

    codes = paths["path_code"]
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    boundaries = np.flatnonzero(
        np.concatenate(([True], sorted_codes[1:] != sorted_codes[:-1])))
    boundaries = np.append(boundaries, len(sorted_codes))

    timestamps = paths["timestamp"][order]
    occurrences = paths["occurrences"][order]
    exec_mean = paths["exec_mean"][order]
    kind_codes = paths["kind"][order]
    trace_codes = paths["trace_code"][order]
    rows_all = rows_all[order]
    path_table = paths["path_table"]
    trace_table = paths["trace_table"]

    nodes: dict[str, TreeNode] = {}
    root_key = None
    for i in range(len(boundaries) - 1):
        lo, hi = boundaries[i], boundaries[i + 1]
        key = str(path_table[sorted_codes[lo]])
        path = PathKey.parse(key)
        kinds = np.unique(kind_codes[lo:hi])
        kind = _KIND_NAMES[int(kinds[0])] if len(kinds) == 1 else "mixed"
        nodes[key] = TreeNode(
            path=path,
            kind=kind,
            timestamps=timestamps[lo:hi].astype(np.int64),
            freq=occurrences[lo:hi].astype(np.int64),
            exec_mean=exec_mean[lo:hi].astype(np.float64),
            trace_rows=rows_all[lo:hi],
            _trace_table=trace_table,
            _trace_codes=trace_codes[lo:hi],
        )
        if path.depth == 1:
            root_key = key
    if root_key is None:
        raise ValueError("record set has no root-level path")
    _link_children(nodes, root_key)
    return AggregatedTree(root=nodes[root_key].path, nodes=nodes, request_count=n_e2e)


def build_tree_arrays(path_arrays: dict, e2e_arrays: dict) -> AggregatedTree:
    """Adapter from decoded string columns to the coded builder."""
    if len(e2e_arrays["trace_id"]) == 0:
        raise EmptySelectionError("no requests in selection")
    if len(path_arrays["path"]) == 0:
        raise EmptySelectionError("selection has e2e records but no path records")
    path_table, path_code = np.unique(path_arrays["path"], return_inverse=True)
    p_trace_table, p_trace_code = np.unique(path_arrays["trace_id"], return_inverse=True)
    e_trace_table, e_trace_code = np.unique(e2e_arrays["trace_id"], return_inverse=True)
    paths = {
        "path_table": path_table,
        "trace_table": p_trace_table,
        "path_code": path_code,
        "trace_code": p_trace_code,
        "occurrences": np.asarray(path_arrays["occurrences"]),
        "exec_mean": np.asarray(path_arrays["exec_mean"]),
        "timestamp": np.asarray(path_arrays["timestamp"]),
        "kind": np.asarray(path_arrays["kind"]),
    }
    e2e = {
        "trace_table": e_trace_table,
        "trace_code": e_trace_code,
        "response_time": np.asarray(e2e_arrays["response_time"]),
        "timestamp": np.asarray(e2e_arrays["timestamp"]),
    }
    return build_tree_coded(paths, e2e)


def _link_children(nodes: dict[str, TreeNode], root_key: str):
    for key, node in nodes.items():
        if key == root_key:
            continue
        parent = node.path.parent()
        if parent is None or parent.canonical not in nodes:
            raise ValueError(f"path {key} has no parent node (prefix closure violated)")
        nodes[parent.canonical].children.append(node.path)
    for node in nodes.values():
        node.children.sort(key=lambda p: p.canonical)


def node_series(
    tree: AggregatedTree,
    path: Union[PathKey, str],
    attr: AttributeKind,
) -> list[tuple[str, float]]:
    """Per-trace attribute values for one node, ordered by
    (trace timestamp, trace_id): count for frequency, µs for execution time."""
    node = tree.node(path)
    values = node.values(attr)
    return list(zip(node.trace_ids, values.tolist()))
