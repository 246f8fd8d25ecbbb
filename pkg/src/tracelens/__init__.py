"""Trace analytics for microservices performance.

Ingests distributed trace batches, reconstructs per-request RPC execution
paths into an embedded record store, and relates RPC-level attributes
(execution time, invocation frequency) to end-to-end response time
through forward analysis (attribute clusters → highlighted response-time
regions) and backward analysis (response-time brush → per-path divergence).
"""

from .model import (
    ParseWarning,
    RefKind,
    RpcName,
    SpanRecord,
    Trace,
    parse_trace_batch,
    serialize_traces,
    validate_trace,
)
from .paths import (
    E2ERecord,
    PathKey,
    PathRecord,
    PreprocessSummary,
    extract_paths,
    preprocess_batch,
)
from .stats import (
    Cluster,
    ClusterResult,
    CvStat,
    DivergenceStat,
    Histogram,
    cluster_1d,
    coefficient_of_variation,
    cv_color,
    highlight_mask,
    kl_color,
    kl_divergence,
    make_histogram,
    partition_by_range,
    silhouette,
)
from .store import TraceStore
from .synth import (
    CallCount,
    InjectionSpec,
    LatencySpec,
    TopologyNode,
    TopologySpec,
    balanced_topology,
    delay_for_e2e_increase,
    generate,
    generate_multimode,
    load_injections,
    load_topology,
)
from .tree import AggregatedTree, AttributeKind, TreeNode, build_tree, node_series

__version__ = "0.1.0"

__all__ = [
    "AggregatedTree",
    "AttributeKind",
    "CallCount",
    "Cluster",
    "ClusterResult",
    "CvStat",
    "DivergenceStat",
    "E2ERecord",
    "Histogram",
    "InjectionSpec",
    "LatencySpec",
    "ParseWarning",
    "PathKey",
    "PathRecord",
    "PreprocessSummary",
    "RefKind",
    "RpcName",
    "SpanRecord",
    "TopologyNode",
    "TopologySpec",
    "Trace",
    "TraceStore",
    "TreeNode",
    "balanced_topology",
    "build_tree",
    "cluster_1d",
    "coefficient_of_variation",
    "cv_color",
    "delay_for_e2e_increase",
    "extract_paths",
    "generate",
    "generate_multimode",
    "highlight_mask",
    "kl_color",
    "kl_divergence",
    "load_injections",
    "load_topology",
    "make_histogram",
    "node_series",
    "parse_trace_batch",
    "partition_by_range",
    "preprocess_batch",
    "serialize_traces",
    "silhouette",
    "validate_trace",
]
