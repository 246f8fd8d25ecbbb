"""Synthetic trace corpus generator for desk-scale evaluation scenarios.

Latency composition is sequential: a span's duration is its own compute
time plus the durations of its synchronous children; asynchronous
children are fire-and-forget (FOLLOWS_FROM) and do not advance the
parent's clock, so their delays never reach the end-to-end time.

Injections fire independently per trace with probability `fraction`.
With propagate=true the delay joins the target's own compute time and
flows to every ancestor through the sequential composition (E2E grows by
exactly the delay per occurrence); with propagate=false only the target
span's reported duration grows, which is only containment-safe for
asynchronous targets.

All randomness derives from numpy SeedSequence(seed) spawned per trace,
so output batches are byte-identical across runs for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
import yaml

from .errors import TopologyError
from .model import RefKind, RpcName, SpanRecord, Trace, validate_trace
from .paths import PathKey

DEFAULT_BASE_TIME_US = 1_704_067_200_000_000  # 2024-01-01T00:00:00Z
DEFAULT_ARRIVAL_US = (50_000, 150_000)


@dataclass(frozen=True)
class LatencySpec:
    """Base latency model for one RPC's own compute time, in µs."""

    kind: str            # constant | uniform | lognormal
    value_us: float = 0.0        # constant
    lo_us: float = 0.0           # uniform
    hi_us: float = 0.0           # uniform
    median_us: float = 0.0       # lognormal
    sigma: float = 0.0           # lognormal, log-space

    def __post_init__(self):
        if self.kind == "constant":
            if self.value_us <= 0:
                raise TopologyError("constant latency needs value_us > 0")
        elif self.kind == "uniform":
            if not (0 < self.lo_us <= self.hi_us):
                raise TopologyError("uniform latency needs 0 < lo_us ≤ hi_us")
        elif self.kind == "lognormal":
            if self.median_us <= 0 or self.sigma < 0:
                raise TopologyError("lognormal latency needs median_us > 0, sigma ≥ 0")
        else:
            raise TopologyError(f"unknown latency kind {self.kind!r}")

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "constant":
            return self.value_us
        if self.kind == "uniform":
            return float(rng.uniform(self.lo_us, self.hi_us))
        return float(rng.lognormal(np.log(self.median_us), self.sigma))

    def mean_us(self) -> float:
        if self.kind == "constant":
            return self.value_us
        if self.kind == "uniform":
            return (self.lo_us + self.hi_us) / 2.0
        return self.median_us * float(np.exp(self.sigma ** 2 / 2.0))

    @classmethod
    def from_dict(cls, raw: dict) -> "LatencySpec":
        return cls(**raw)

    def as_dict(self) -> dict:
        out = {"kind": self.kind}
        fields = {
            "constant": ("value_us",),
            "uniform": ("lo_us", "hi_us"),
            "lognormal": ("median_us", "sigma"),
        }[self.kind]
        out.update({f: getattr(self, f) for f in fields})
        return out


@dataclass(frozen=True)
class CallCount:
    """Invocations of a node per parent call: fixed or a discrete mix."""

    values: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.values or len(self.values) != len(self.weights):
            raise TopologyError("call count needs matching values/weights")
        if any(v < 1 for v in self.values):
            raise TopologyError("call counts must be ≥ 1")
        if len(set(self.values)) != len(self.values):
            raise TopologyError("call count levels must be distinct")
        if any(w <= 0 for w in self.weights):
            raise TopologyError("call count weights must be > 0")

    @classmethod
    def fixed(cls, n: int) -> "CallCount":
        return cls(values=(n,), weights=(1.0,))

    @property
    def is_fixed(self) -> bool:
        return len(self.values) == 1

    def sample(self, rng: np.random.Generator) -> int:
        if self.is_fixed:
            return self.values[0]
        w = np.asarray(self.weights, dtype=np.float64)
        return int(rng.choice(np.asarray(self.values), p=w / w.sum()))

    def mean(self) -> float:
        w = np.asarray(self.weights, dtype=np.float64)
        return float(np.dot(self.values, w / w.sum()))

    @classmethod
    def from_config(cls, raw) -> "CallCount":
        if isinstance(raw, int):
            return cls.fixed(raw)
        return cls(values=tuple(raw["values"]),
                   weights=tuple(raw.get("weights", [1.0] * len(raw["values"]))))

    def as_config(self):
        if self.is_fixed:
            return self.values[0]
        return {"values": list(self.values), "weights": list(self.weights)}


@dataclass(frozen=True)
class TopologyNode:
    rpc: RpcName
    latency: LatencySpec
    kind: str = "sync"                     # sync | async (edge from parent)
    calls: CallCount = field(default_factory=lambda: CallCount.fixed(1))
    children: tuple["TopologyNode", ...] = ()

    def __post_init__(self):
        if self.kind not in ("sync", "async"):
            raise TopologyError(f"node kind must be sync or async, got {self.kind!r}")


@dataclass(frozen=True)
class TopologySpec:
    root: TopologyNode

    def paths(self):
        """All (PathKey, TopologyNode) pairs, depth-first."""
        def walk(node, prefix):
            path = PathKey(prefix + (node.rpc,))
            yield path, node
            for child in node.children:
                yield from walk(child, path.elements)
        yield from walk(self.root, ())

    def find(self, target: PathKey) -> TopologyNode:
        for path, node in self.paths():
            if path == target:
                return node
        raise TopologyError(f"path {target.canonical} not in topology")

    def ancestry(self, target: PathKey) -> list[TopologyNode]:
        """Nodes from root to target inclusive."""
        nodes = []
        node = self.root
        if PathKey((node.rpc,)).elements != target.elements[:1]:
            raise TopologyError(f"path {target.canonical} not in topology")
        nodes.append(node)
        for rpc in target.elements[1:]:
            for child in node.children:
                if child.rpc == rpc:
                    node = child
                    break
            else:
                raise TopologyError(f"path {target.canonical} not in topology")
            nodes.append(node)
        return nodes

    def expected_e2e_us(self) -> float:
        """Closed-form expected end-to-end time under the sequential model
        (asynchronous subtrees contribute nothing)."""
        def cost(node: TopologyNode) -> float:
            total = node.latency.mean_us()
            for child in node.children:
                if child.kind == "sync":
                    total += child.calls.mean() * cost(child)
            return total
        return cost(self.root)

    @classmethod
    def from_dict(cls, raw: dict) -> "TopologySpec":
        def build(entry: dict, is_root: bool) -> TopologyNode:
            return TopologyNode(
                rpc=RpcName(entry["service"], entry["operation"]),
                latency=LatencySpec.from_dict(entry["latency"]),
                kind="sync" if is_root else entry.get("kind", "sync"),
                calls=CallCount.from_config(entry.get("calls", 1)),
                children=tuple(build(c, False) for c in entry.get("children", [])),
            )
        return cls(root=build(raw, True))

    def as_dict(self) -> dict:
        def render(node: TopologyNode, is_root: bool) -> dict:
            out = {
                "service": node.rpc.service,
                "operation": node.rpc.operation,
                "latency": node.latency.as_dict(),
            }
            if not is_root:
                out["kind"] = node.kind
            if not (node.calls.is_fixed and node.calls.values[0] == 1):
                out["calls"] = node.calls.as_config()
            if node.children:
                out["children"] = [render(c, False) for c in node.children]
            return out
        return render(self.root, True)


@dataclass(frozen=True)
class InjectionSpec:
    """A performance fault: `delay_us` added to `target` spans in a
    `fraction` of traces."""

    target: PathKey
    fraction: float
    delay_us: float
    propagate: bool = True

    def __post_init__(self):
        if not (0 < self.fraction <= 1):
            raise TopologyError("injection fraction must be in (0, 1]")
        if self.delay_us <= 0:
            raise TopologyError("injection delay must be > 0")


def validate_injections(topology: TopologySpec, injections: Sequence[InjectionSpec]):
    for inj in injections:
        node = topology.find(inj.target)
        if not inj.propagate and node.kind != "async":
            raise TopologyError(
                f"propagate=false on synchronous target {inj.target.canonical}: "
                "inflating a sync span without its ancestors breaks containment")


def delay_for_e2e_increase(
    topology: TopologySpec, target: PathKey, increase_pct: float
) -> float:
    """Absolute per-occurrence delay that raises the expected E2E by the
    given percentage when injected with propagate=true into the target."""
    occurrences = 1.0
    for node in topology.ancestry(target)[1:]:
        occurrences *= node.calls.mean()
    if occurrences <= 0:
        raise TopologyError("target path is never invoked")
    return topology.expected_e2e_us() * (increase_pct / 100.0) / occurrences


@dataclass
class GenerationReport:
    """Ground truth emitted alongside a batch: per injection, which traces
    it fired in."""

    affected: list[list[str]]

    def as_dict(self, injections: Sequence[InjectionSpec]) -> dict:
        return {
            inj.target.canonical: sorted(ids)
            for inj, ids in zip(injections, self.affected)
        }


def _hex_id(rng: np.random.Generator, nibbles: int) -> str:
    return "".join(f"{rng.integers(0, 1 << 32):08x}" for _ in range(nibbles // 8))


def generate(
    topology: TopologySpec,
    n_traces: int,
    injections: Sequence[InjectionSpec] = (),
    seed: int = 0,
    base_time_us: int = DEFAULT_BASE_TIME_US,
    arrival_us: tuple[int, int] = DEFAULT_ARRIVAL_US,
) -> tuple[list[Trace], GenerationReport]:
    """Generate a deterministic trace batch from the topology.

    Each injection fires independently per trace with its fraction; the
    report records which trace ids each injection touched.
    """
    if n_traces < 1:
        raise TopologyError("need n_traces ≥ 1")
    injections = list(injections)
    validate_injections(topology, injections)

    seqs = np.random.SeedSequence(seed).spawn(n_traces + 1)
    arrival_rng = np.random.default_rng(seqs[0])
    report = GenerationReport(affected=[[] for _ in injections])
    traces: list[Trace] = []
    t_cursor = base_time_us

    for i in range(n_traces):
        t_cursor += int(arrival_rng.uniform(*arrival_us))
        # Separate streams so injection decisions never perturb the latency
        # draws: an injected batch differs from its baseline twin only by
        # the delays themselves.
        lat_seq, inj_seq = seqs[i + 1].spawn(2)
        rng = np.random.default_rng(lat_seq)
        inj_rng = np.random.default_rng(inj_seq)
        trace_id = _hex_id(rng, 32)
        fired = [inj_rng.random() < inj.fraction for inj in injections]
        for inj_idx, f in enumerate(fired):
            if f:
                report.affected[inj_idx].append(trace_id)

        spans: list[SpanRecord] = []

        def assemble(node: TopologyNode, path: PathKey, start: int,
                     parent_id: Optional[str], ref: RefKind) -> int:
            """Emit this span and its subtree; returns the span's reported
            duration in µs."""
            span_id = _hex_id(rng, 16)
            own_us = int(round(node.latency.sample(rng)))
            # Delays are applied at whole-µs resolution, separately from the
            # latency rounding, so E2E(affected) − E2E(baseline) is exact.
            extra_us = 0
            post_us = 0
            for inj, f in zip(injections, fired):
                if f and inj.target == path:
                    if inj.propagate:
                        extra_us += int(round(inj.delay_us))
                    else:
                        post_us += int(round(inj.delay_us))
            cursor = start + own_us + extra_us
            for child in node.children:
                child_path = path.child(child.rpc)
                for _ in range(child.calls.sample(rng)):
                    child_ref = RefKind.CHILD if child.kind == "sync" else RefKind.FOLLOWS
                    child_duration = assemble(child, child_path, cursor, span_id, child_ref)
                    if child.kind == "sync":
                        cursor += child_duration
            duration = (cursor - start) + post_us
            spans.append(SpanRecord(
                trace_id=trace_id,
                span_id=span_id,
                rpc=node.rpc,
                parent_span_id=parent_id,
                ref_kind=ref,
                start_time=start,
                duration=duration,
            ))
            return duration

        assemble(topology.root, PathKey((topology.root.rpc,)), t_cursor, None, RefKind.ROOT)
        spans.sort(key=lambda s: (s.start_time, s.span_id))
        traces.append(validate_trace(spans))
    return traces, report


def generate_multimode(
    topology: TopologySpec,
    target: PathKey,
    levels: Sequence[int],
    weights: Optional[Sequence[float]] = None,
    per_occurrence_cost_us: Optional[float] = None,
    n_traces: int = 1000,
    seed: int = 0,
    **kwargs,
) -> tuple[list[Trace], GenerationReport]:
    """Batch where the target path occurs exactly `levels[j]` times per
    trace (drawn by weight), so the E2E distribution shows one mode per
    level.

    Ancestors of the target must be invoked exactly once per trace and
    the chain must be synchronous, otherwise occurrence counts and modes
    would not correspond one-to-one.
    """
    levels = tuple(int(v) for v in levels)
    if weights is None:
        weights = (1.0,) * len(levels)
    chain = topology.ancestry(target)
    for node in chain[1:]:
        if node.kind != "sync":
            raise TopologyError("multimode target chain must be synchronous")
    for node in chain[:-1]:
        if not (node.calls.is_fixed and node.calls.values[0] == 1):
            raise TopologyError("multimode target ancestors must have calls = 1")
    for parent, step in zip(chain, chain[1:]):
        if sum(1 for c in parent.children if c.rpc == step.rpc) != 1:
            raise TopologyError(
                "multimode target chain is ambiguous: sibling with the same RPC")

    def rebuild(node: TopologyNode, depth: int) -> TopologyNode:
        if depth == len(chain) - 1:
            latency = node.latency
            if per_occurrence_cost_us is not None:
                latency = LatencySpec(kind="constant", value_us=per_occurrence_cost_us)
            return replace(node, calls=CallCount(values=levels, weights=tuple(weights)),
                           latency=latency)
        children = tuple(
            rebuild(c, depth + 1) if c.rpc == chain[depth + 1].rpc else c
            for c in node.children
        )
        return replace(node, children=children)

    modified = TopologySpec(root=rebuild(topology.root, 0))
    return generate(modified, n_traces, injections=(), seed=seed, **kwargs)


# -- declarative configuration ---------------------------------------------------

def load_topology(path) -> TopologySpec:
    with open(path) as f:
        raw = yaml.safe_load(f)
    if not isinstance(raw, dict):
        raise TopologyError(f"{path}: topology config must be a mapping")
    try:
        return TopologySpec.from_dict(raw)
    except (KeyError, TypeError) as e:
        raise TopologyError(f"{path}: invalid topology config: {e}") from e


def load_injections(path, topology: TopologySpec) -> list[InjectionSpec]:
    """Injection list; `e2e_increase_pct` entries are translated into
    absolute delays from the topology's closed-form baseline."""
    with open(path) as f:
        raw = yaml.safe_load(f)
    if raw is None:
        return []
    if not isinstance(raw, list):
        raise TopologyError(f"{path}: injection config must be a list")
    out = []
    for entry in raw:
        try:
            target = PathKey.parse(entry["target"])
            if "delay_us" in entry:
                delay = float(entry["delay_us"])
            else:
                delay = delay_for_e2e_increase(
                    topology, target, float(entry["e2e_increase_pct"]))
            out.append(InjectionSpec(
                target=target,
                fraction=float(entry.get("fraction", 0.1)),
                delay_us=delay,
                propagate=bool(entry.get("propagate", True)),
            ))
        except (KeyError, TypeError, ValueError) as e:
            raise TopologyError(f"{path}: invalid injection entry: {e}") from e
    validate_injections(topology, out)
    return out


def balanced_topology(
    depth: int,
    fanout: int,
    latency: LatencySpec,
    root_rpc: Optional[RpcName] = None,
    service_prefix: str = "svc",
) -> TopologySpec:
    """Uniform tree helper: `depth` levels below the root, `fanout`
    synchronous children per node, one latency model everywhere."""
    def build(level: int, label: str) -> TopologyNode:
        children = ()
        if level < depth:
            children = tuple(
                build(level + 1, f"{label}{chr(ord('a') + j)}")
                for j in range(fanout)
            )
        return TopologyNode(
            rpc=RpcName(f"{service_prefix}-{label}", f"op-{label}"),
            latency=latency,
            children=children,
        )
    node = TopologyNode(
        rpc=root_rpc or RpcName("gateway", "request"),
        latency=latency,
        children=tuple(build(1, chr(ord('a') + j)) for j in range(fanout)) if depth else (),
    )
    return TopologySpec(root=node)
