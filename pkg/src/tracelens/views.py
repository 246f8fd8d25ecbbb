"""Payload assembly shared by the HTTP API and the headless report command.

Every function here is a pure function of (store contents, parameters)
and returns JSON-ready dicts; the CLI's structured output and the HTTP
responses are the same objects. Colors are computed server-side so
consumers never re-implement the ramp.

The p99 outlier filter applies to execution-time values feeding CV and
clustering (never to frequency); backward divergence compares unfiltered
values on both sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import EmptySelectionError
from .model import RpcName
from .paths import PathKey
from .store import TraceStore
from .tree import AggregatedTree, AttributeKind, TreeNode, build_tree_coded
from .stats import (
    DEFAULT_HIST_BINS,
    cluster_1d,
    coefficient_of_variation,
    color_hex,
    cv_color,
    highlight_mask,
    kl_color,
    kl_divergence,
    make_histogram,
)

FULL_RANGE = (0, (1 << 62) - 1)


@dataclass
class Scope:
    """A resolved (root, time range) selection: the aggregated tree plus
    the end-to-end response times of all matching traces, ordered by
    (timestamp, trace_id). Node trace_rows index into that order."""

    root: RpcName
    t0: int
    t1: int
    tree: AggregatedTree
    e2e_values: np.ndarray           # µs
    _trace_table: np.ndarray
    _trace_codes: np.ndarray
    _trace_ids: Optional[list] = None

    @property
    def request_count(self) -> int:
        return len(self.e2e_values)

    @property
    def e2e_trace_ids(self) -> list[str]:
        if self._trace_ids is None:
            self._trace_ids = [str(t) for t in self._trace_table[self._trace_codes]]
        return self._trace_ids


def resolve_scope(store: TraceStore, root: RpcName, t0: int, t1: int) -> Optional[Scope]:
    """Build the scope for a selection; None when it matches no requests."""
    e2e = store.query_e2e_coded(root, t0, t1)
    if len(e2e["trace_code"]) == 0:
        return None
    paths = store.query_paths_coded(root, t0, t1)
    try:
        tree = build_tree_coded(paths, e2e)
    except EmptySelectionError:
        return None
    return Scope(
        root=root,
        t0=t0,
        t1=t1,
        tree=tree,
        e2e_values=e2e["response_time"].astype(np.float64),
        _trace_table=e2e["trace_table"],
        _trace_codes=e2e["trace_code"],
    )


def _attr_kind(attr: Union[str, AttributeKind]) -> AttributeKind:
    if isinstance(attr, AttributeKind):
        return attr
    try:
        return AttributeKind(attr)
    except ValueError:
        raise ValueError(
            f"unknown attribute {attr!r}; expected one of "
            f"{[a.value for a in AttributeKind]}") from None


def _analysis_values(node: TreeNode, attr: AttributeKind) -> tuple[np.ndarray, np.ndarray]:
    """Values feeding CV/clustering for a node, plus the indices kept by
    the p99 filter (identity for frequency)."""
    values = node.values(attr).astype(np.float64)
    if attr is AttributeKind.EXECUTION_TIME:
        keep = np.flatnonzero(values <= np.percentile(values, 99))
        return values[keep], keep
    return values, np.arange(len(values))


def no_data_payload(root: RpcName, t0: int, t1: int) -> dict:
    return {"status": "no data", "root": root.canonical, "from": t0, "to": t1}


def roots_payload(store: TraceStore, t0: int, t1: int, q: Optional[str] = None) -> dict:
    """Root listing with request counts; q filters by case-insensitive
    substring over canonical names."""
    roots = store.list_roots(t0, t1)
    if q:
        needle = q.lower()
        roots = [(r, n) for r, n in roots if needle in r.canonical.lower()]
    return {
        "status": "ok",
        "from": t0,
        "to": t1,
        "roots": [{"root": r.canonical, "count": n} for r, n in roots],
    }


def tree_payload(scope: Scope, attr: Union[str, AttributeKind]) -> dict:
    """Forward-mode tree: one entry per node with CV-based coloring."""
    kind = _attr_kind(attr)
    nodes = []
    for node in scope.tree.walk():
        values, _ = _analysis_values(node, kind)
        stat = coefficient_of_variation(values)
        rgb = cv_color(stat.cv)
        parent = node.path.parent()
        nodes.append({
            "path": node.path.canonical,
            "parent": parent.canonical if parent else None,
            "kind": node.kind,
            "support": node.support,
            "cv": stat.cv,
            "n_used": stat.n_used,
            "n_filtered": stat.n_filtered,
            "color": color_hex(rgb),
            "rgb": list(rgb),
        })
    return {
        "status": "ok",
        "root": scope.root.canonical,
        "from": scope.t0,
        "to": scope.t1,
        "attr": kind.value,
        "request_count": scope.request_count,
        "nodes": nodes,
    }


def histogram_payload(scope: Scope, bins: int = DEFAULT_HIST_BINS) -> dict:
    hist = make_histogram(scope.e2e_values, bins)
    return {
        "status": "ok",
        "root": scope.root.canonical,
        "from": scope.t0,
        "to": scope.t1,
        "bins": bins,
        "edges": list(hist.edges),
        "counts": list(hist.counts),
        "total": hist.total,
    }


def forward_payload(
    scope: Scope,
    attr: Union[str, AttributeKind],
    path: Union[str, PathKey],
    bins: int = DEFAULT_HIST_BINS,
) -> dict:
    """Forward analysis for one node: attribute value clusters plus, per
    cluster, the highlighted region of the end-to-end histogram."""
    kind = _attr_kind(attr)
    node = scope.tree.node(path if isinstance(path, str) else path.canonical)
    values, kept = _analysis_values(node, kind)
    result = cluster_1d(values)
    hist = make_histogram(scope.e2e_values, bins)

    clusters = []
    for cluster, share in zip(result.clusters, result.shares()):
        member_pos = kept[list(cluster.members)]
        member_ids = [node.trace_ids[i] for i in member_pos]
        member_e2e = scope.e2e_values[node.trace_rows[member_pos]]
        mask = highlight_mask(hist, member_e2e)
        clusters.append({
            "lo": cluster.lo,
            "hi": cluster.hi,
            "size": cluster.size,
            "share": share,
            "member_trace_ids": member_ids,
            "highlight": list(mask),
        })
    return {
        "status": "ok",
        "root": scope.root.canonical,
        "from": scope.t0,
        "to": scope.t1,
        "attr": kind.value,
        "path": node.path.canonical,
        "support": node.support,
        "n_clustered": int(len(values)),
        "n_filtered": int(node.support - len(values)),
        "k": result.k,
        "silhouette": result.silhouette,
        "clusters": clusters,
        "histogram": {"edges": list(hist.edges), "counts": list(hist.counts)},
    }


def _split_node_values(node: TreeNode, attr: AttributeKind,
                       in_range: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    values = node.values(attr).astype(np.float64)
    mask = in_range[node.trace_rows]
    return values[mask], values[~mask]


def backward_tree_payload(
    scope: Scope,
    attr: Union[str, AttributeKind],
    lo: int,
    hi: int,
) -> dict:
    """Backward analysis: recolor every node by the divergence of its
    attribute values between brushed and unbrushed traces.

    The root's divergence is reported but flagged: the brush selects by
    the root's own attribute, so its divergence is a property of the
    selection, not a finding.
    """
    if lo > hi:
        raise ValueError("lo must be ≤ hi")
    kind = _attr_kind(attr)
    in_range = (scope.e2e_values >= lo) & (scope.e2e_values <= hi)
    n_selected = int(in_range.sum())
    if n_selected == 0 or n_selected == scope.request_count:
        return {
            "status": "insufficient-data",
            "root": scope.root.canonical,
            "from": scope.t0,
            "to": scope.t1,
            "attr": kind.value,
            "lo": lo,
            "hi": hi,
            "n_selected": n_selected,
            "n_other": scope.request_count - n_selected,
            "nodes": [],
        }

    nodes = []
    for node in scope.tree.walk():
        sel_vals, oth_vals = _split_node_values(node, kind, in_range)
        stat = kl_divergence(sel_vals, oth_vals)
        rgb = kl_color(stat.kl, stat.status)
        parent = node.path.parent()
        nodes.append({
            "path": node.path.canonical,
            "parent": parent.canonical if parent else None,
            "kind": node.kind,
            "support": node.support,
            "kl": stat.kl,
            "kl_status": stat.status,
            "n_selected": stat.n_selected,
            "n_other": stat.n_other,
            "color": color_hex(rgb),
            "rgb": list(rgb),
            "selection_basis": node.path.parent() is None,
        })
    return {
        "status": "ok",
        "root": scope.root.canonical,
        "from": scope.t0,
        "to": scope.t1,
        "attr": kind.value,
        "lo": lo,
        "hi": hi,
        "n_selected": n_selected,
        "n_other": scope.request_count - n_selected,
        "nodes": nodes,
    }


def backward_node_payload(
    scope: Scope,
    attr: Union[str, AttributeKind],
    path: Union[str, PathKey],
    lo: int,
    hi: int,
    bins: int = DEFAULT_HIST_BINS,
) -> dict:
    """Node detail for backward analysis: the selected and other attribute
    distributions on shared bins, plus the node's divergence."""
    if lo > hi:
        raise ValueError("lo must be ≤ hi")
    kind = _attr_kind(attr)
    node = scope.tree.node(path if isinstance(path, str) else path.canonical)
    in_range = (scope.e2e_values >= lo) & (scope.e2e_values <= hi)
    n_selected = int(in_range.sum())
    if n_selected == 0 or n_selected == scope.request_count:
        return {"status": "insufficient-data", "path": node.path.canonical,
                "lo": lo, "hi": hi}
    sel_vals, oth_vals = _split_node_values(node, kind, in_range)
    stat = kl_divergence(sel_vals, oth_vals)
    union = np.concatenate([sel_vals, oth_vals])
    shared = make_histogram(union, bins)
    edges = np.asarray(shared.edges)
    sel_counts, _ = np.histogram(sel_vals, bins=edges)
    oth_counts, _ = np.histogram(oth_vals, bins=edges)
    return {
        "status": "ok",
        "root": scope.root.canonical,
        "attr": kind.value,
        "path": node.path.canonical,
        "lo": lo,
        "hi": hi,
        "edges": list(shared.edges),
        "selected_counts": [int(c) for c in sel_counts],
        "other_counts": [int(c) for c in oth_counts],
        "n_selected": int(len(sel_vals)),
        "n_other": int(len(oth_vals)),
        "kl": stat.kl,
        "kl_status": stat.status,
    }


def backward_ranking(payload: dict) -> list[dict]:
    """Nodes of a backward tree payload ranked by divergence, most
    divergent first; the root is excluded (it is the selection basis)."""
    ranked = [n for n in payload.get("nodes", ()) if not n["selection_basis"]]
    return sorted(ranked, key=lambda n: (-(n["kl"] if n["kl"] is not None else -1.0),
                                         n["path"]))
