"""
Forward analysis walkthrough
============================

Inject a latency fault into one RPC of a synthetic service topology,
then find it again from the analytics side: the variability coloring
points at the node, clustering its execution times separates the slow
requests, and the highlight shows where they land in the end-to-end
distribution.

Run:  python3 demos/01_forward_analysis.py
"""

import json
import math
import tempfile
from pathlib import Path

from tracelens import (
    InjectionSpec,
    LatencySpec,
    PathKey,
    RpcName,
    TraceStore,
    balanced_topology,
    delay_for_e2e_increase,
    generate,
    preprocess_batch,
    serialize_traces,
)
from tracelens import views

workdir = Path(tempfile.mkdtemp(prefix="tracelens-demo-"))

# A gateway fanning out over three service tiers, ~1 ms per RPC.
topology = balanced_topology(
    depth=3, fanout=3,
    latency=LatencySpec(kind="lognormal", median_us=1000, sigma=0.15),
)
target = PathKey.parse("gateway:request/svc-b:op-b/svc-ba:op-ba/svc-baa:op-baa")

# Delay sized to raise the end-to-end time by 20%, firing in 10% of requests.
delay = delay_for_e2e_increase(topology, target, increase_pct=20)
print(f"injecting {delay / 1000:.1f} ms into {target.canonical} (10% of requests)")

traces, report = generate(
    topology, n_traces=1500, seed=11,
    injections=[InjectionSpec(target=target, fraction=0.10, delay_us=delay)],
)

# Through the batch pipeline: file → records → store.
trace_file = workdir / "traces.json"
trace_file.write_text(json.dumps(serialize_traces(traces)))
store = TraceStore.create(workdir / "store")
summary = preprocess_batch([trace_file], store)
print(f"preprocessed {summary.traces_ok} traces, "
      f"{summary.records_written} records in {summary.elapsed:.1f}s")

# The tree, colored by coefficient of variation of execution time.
scope = views.resolve_scope(store, RpcName("gateway", "request"), 0, 1 << 62)
tree = views.tree_payload(scope, "execution-time")
print("\nmost variable execution paths:")
for node in sorted(tree["nodes"], key=lambda n: -n["cv"])[:5]:
    bar = "#" * round(20 * min(n := node["cv"], 1))
    print(f"  cv={node['cv']:5.2f} {bar:<20} {node['path']}  {node['color']}")

# Click the reddest node: cluster its execution times.
suspect = max(tree["nodes"], key=lambda n: n["cv"])["path"]
forward = views.forward_payload(scope, "execution-time", suspect)
print(f"\nexecution-time behaviors of {suspect} (k={forward['k']}, "
      f"silhouette {forward['silhouette']:.3f}):")
for c in forward["clusters"]:
    print(f"  {c['lo'] / 1000:7.2f} to {c['hi'] / 1000:7.2f} ms  "
          f"{c['share'] * 100:5.2f}% of requests")

# Click the slow bar: where do those requests sit end to end?
slow = forward["clusters"][-1]
edges = forward["histogram"]["edges"]
counts = forward["histogram"]["counts"]
peak = max(counts)
print("\nend-to-end distribution, slow cluster highlighted (*):")
for i in range(0, len(counts), 2):
    total = counts[i] + (counts[i + 1] if i + 1 < len(counts) else 0)
    hot = slow["highlight"][i] + (slow["highlight"][i + 1] if i + 1 < len(counts) else 0)
    bar = "*" * math.ceil(40 * hot / peak) + "." * round(40 * (total - hot) / peak)
    print(f"  {edges[i] / 1000:7.1f} ms |{bar}")

ground_truth = set(report.affected[0])
found = set(slow["member_trace_ids"])
print(f"\nground truth: slow cluster recovered "
      f"{len(found & ground_truth)}/{len(found)} injected requests")
