"""
Frequency modes walkthrough
===========================

Not every performance mode is a slow RPC: sometimes requests differ in
*how many times* they invoke a path. Generate requests that call one RPC
2, 6 or 14 times and watch the frequency attribute split the end-to-end
distribution into its modes.

Run:  python3 demos/03_frequency_modes.py
"""

import json
import tempfile
from pathlib import Path

from tracelens import (
    LatencySpec,
    PathKey,
    RpcName,
    TopologySpec,
    TraceStore,
    generate_multimode,
    preprocess_batch,
    serialize_traces,
)
from tracelens import views
from tracelens.synth import TopologyNode

workdir = Path(tempfile.mkdtemp(prefix="tracelens-demo-"))

topology = TopologySpec(root=TopologyNode(
    rpc=RpcName("ui", "queryInfo"),
    latency=LatencySpec(kind="lognormal", median_us=1000, sigma=0.1),
    children=(TopologyNode(
        rpc=RpcName("station", "queryForStationId"),
        latency=LatencySpec(kind="constant", value_us=2000)),),
))
target = PathKey.parse("ui:queryInfo/station:queryForStationId")

traces, _ = generate_multimode(
    topology, target, levels=(2, 6, 14), per_occurrence_cost_us=2000,
    n_traces=1200, seed=13)
trace_file = workdir / "traces.json"
trace_file.write_text(json.dumps(serialize_traces(traces)))
store = TraceStore.create(workdir / "store")
preprocess_batch([trace_file], store)
scope = views.resolve_scope(store, RpcName("ui", "queryInfo"), 0, 1 << 62)

hist = views.histogram_payload(scope, bins=40)
peak = max(hist["counts"])
print("end-to-end response time distribution (three modes):")
for e, c in zip(hist["edges"], hist["counts"]):
    if c:
        print(f"  {e / 1000:6.1f} ms |{'#' * round(40 * c / peak)}")

forward = views.forward_payload(scope, "frequency", target.canonical, bins=40)
print(f"\ninvocation-count behaviors of {target.canonical} (k={forward['k']}):")
for c in forward["clusters"]:
    bins_hit = [i for i, m in enumerate(c["highlight"]) if m]
    lo_ms = hist["edges"][bins_hit[0]] / 1000
    hi_ms = hist["edges"][bins_hit[-1] + 1] / 1000
    print(f"  {int(c['lo']):2d} invocations  {c['share'] * 100:5.1f}% of requests  "
          f"-> e2e mode {lo_ms:.1f}-{hi_ms:.1f} ms")

print("\neach invocation level owns one mode of the distribution")
