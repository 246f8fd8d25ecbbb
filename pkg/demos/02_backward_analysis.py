"""
Backward analysis walkthrough
=============================

Start from the end-to-end response-time distribution instead: brush its
slow region and let per-node divergence point at the execution path that
behaves differently there. Includes an asynchronous red herring whose
execution time varies wildly without moving the end-to-end time at all.

Run:  python3 demos/02_backward_analysis.py
"""

import json
import math
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from tracelens import (
    InjectionSpec,
    LatencySpec,
    PathKey,
    RpcName,
    TopologySpec,
    TraceStore,
    balanced_topology,
    delay_for_e2e_increase,
    generate,
    preprocess_batch,
    serialize_traces,
)
from tracelens import views
from tracelens.synth import TopologyNode

workdir = Path(tempfile.mkdtemp(prefix="tracelens-demo-"))

# Same tiered topology, plus one fire-and-forget notification RPC.
base = balanced_topology(
    depth=3, fanout=3,
    latency=LatencySpec(kind="lognormal", median_us=1000, sigma=0.15),
)
first = base.root.children[0]
notify = TopologyNode(
    rpc=RpcName("notify", "send"),
    latency=LatencySpec(kind="lognormal", median_us=1000, sigma=0.15),
    kind="async",
)
topology = TopologySpec(root=replace(
    base.root, children=(replace(first, children=first.children + (notify,)),)
    + base.root.children[1:]))

target = PathKey.parse("gateway:request/svc-c:op-c/svc-ca:op-ca/svc-caa:op-caa")
red_herring = PathKey.parse("gateway:request/svc-a:op-a/notify:send")
delay = delay_for_e2e_increase(topology, target, 20)

traces, report = generate(
    topology, n_traces=1500, seed=12,
    injections=[
        InjectionSpec(target=target, fraction=0.10, delay_us=delay),
        InjectionSpec(target=red_herring, fraction=0.10, delay_us=delay,
                      propagate=False),
    ],
)
trace_file = workdir / "traces.json"
trace_file.write_text(json.dumps(serialize_traces(traces)))
store = TraceStore.create(workdir / "store")
preprocess_batch([trace_file], store)
scope = views.resolve_scope(store, RpcName("gateway", "request"), 0, 1 << 62)

# Brush the slow region: everything above the 90th percentile.
e2e = scope.e2e_values
lo = math.ceil(float(np.percentile(e2e, 90)))
hi = int(e2e.max()) + 1
print(f"brushing end-to-end range [{lo / 1000:.1f}, {hi / 1000:.1f}] ms "
      f"({((e2e >= lo) & (e2e <= hi)).sum()} of {len(e2e)} requests)")

backward = views.backward_tree_payload(scope, "execution-time", lo, hi)
ranked = views.backward_ranking(backward)
print("\npaths ranked by divergence between brushed and other requests:")
fault_chain = {"/".join(e.canonical for e in target.elements[:d + 1])
               for d in range(target.depth)}
for i, node in enumerate(ranked[:6], start=1):
    marker = ""
    if node["path"] == target.canonical:
        marker = "   <- injected fault"
    elif node["path"] in fault_chain:
        marker = "   <- on the fault's call chain"
    elif node["path"] == red_herring.canonical:
        marker = "   <- async red herring"
    print(f"  #{i} kl={node['kl']:6.3f} {node['color']}  {node['path']}{marker}")

herring = next(n for n in backward["nodes"] if n["path"] == red_herring.canonical)
print(f"\nasync node scores kl={herring['kl']:.3f}: its execution time is "
      "bimodal but uncorrelated with the end-to-end behavior")

# Node detail: the two distributions behind the top-ranked node's color.
detail = views.backward_node_payload(scope, "execution-time",
                                     ranked[0]["path"], lo, hi, bins=24)
peak = max(max(detail["selected_counts"]), max(detail["other_counts"]), 1)
print(f"\nexecution time of {detail['path']}\n"
      "  brushed requests (*) vs the rest (.):")
for e, s, o in zip(detail["edges"], detail["selected_counts"], detail["other_counts"]):
    print(f"  {e / 1000:7.2f} ms |{'*' * round(30 * s / peak)}{'.' * round(30 * o / peak)}")
