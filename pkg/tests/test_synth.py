"""Generator contracts: determinism, closed-form latency composition,
injection arithmetic, multimode occurrence levels."""

import json
import math

import numpy as np
import pytest

from tracelens import (
    CallCount,
    InjectionSpec,
    LatencySpec,
    PathKey,
    RpcName,
    TopologyNode,
    TopologySpec,
    balanced_topology,
    delay_for_e2e_increase,
    extract_paths,
    generate,
    generate_multimode,
    kl_divergence,
    load_injections,
    load_topology,
    parse_trace_batch,
    serialize_traces,
)
from tracelens.errors import TopologyError

CONST = LatencySpec(kind="constant", value_us=100)


def const_topology(depth=2, fanout=2):
    return balanced_topology(depth, fanout, CONST)


class TestTopology:
    def test_expected_e2e_constant(self):
        # depth-2 fanout-2: 7 spans à 100µs, sequential → 700µs
        assert const_topology().expected_e2e_us() == 700.0

    def test_async_child_excluded_from_e2e(self):
        root = TopologyNode(
            rpc=RpcName("ui", "home"), latency=CONST,
            children=(
                TopologyNode(rpc=RpcName("svc", "sync"), latency=CONST),
                TopologyNode(rpc=RpcName("svc", "notify"), latency=CONST, kind="async"),
            ))
        assert TopologySpec(root).expected_e2e_us() == 200.0

    def test_calls_multiply_cost(self):
        root = TopologyNode(
            rpc=RpcName("ui", "home"), latency=CONST,
            children=(
                TopologyNode(rpc=RpcName("svc", "op"), latency=CONST,
                             calls=CallCount.fixed(3)),
            ))
        assert TopologySpec(root).expected_e2e_us() == 400.0

    def test_find_unknown_path(self):
        with pytest.raises(TopologyError):
            const_topology().find(PathKey.parse("no:where"))

    def test_config_roundtrip(self, tmp_path):
        import yaml
        topo = const_topology()
        f = tmp_path / "topo.yaml"
        f.write_text(yaml.safe_dump(topo.as_dict()))
        assert load_topology(f).as_dict() == topo.as_dict()


class TestGenerate:
    def test_constant_latency_deterministic_e2e(self):
        traces, _ = generate(const_topology(), 10, seed=0)
        assert {t.response_time for t in traces} == {700}
        # all traces identical up to ids and timestamps
        assert {len(t.spans) for t in traces} == {7}

    def test_determinism_byte_identical(self):
        a, _ = generate(const_topology(), 15, seed=42)
        b, _ = generate(const_topology(), 15, seed=42)
        assert json.dumps(serialize_traces(a)) == json.dumps(serialize_traces(b))

    def test_different_seed_differs(self):
        a, _ = generate(const_topology(), 5, seed=1)
        b, _ = generate(const_topology(), 5, seed=2)
        assert json.dumps(serialize_traces(a)) != json.dumps(serialize_traces(b))

    def test_sync_injection_full_fraction_exact_delay(self):
        topo = const_topology()
        target = PathKey.parse("gateway:request/svc-a:op-a/svc-aa:op-aa")
        inj = InjectionSpec(target=target, fraction=1.0, delay_us=5000)
        traces, report = generate(topo, 8, seed=3, injections=[inj])
        assert {t.response_time for t in traces} == {700 + 5000}
        assert len(report.affected[0]) == 8

    def test_injection_conservation_vs_baseline_twin(self):
        # same seed with and without injection: affected traces shift by
        # exactly the delay, unaffected are identical
        topo = balanced_topology(2, 2, LatencySpec(kind="uniform", lo_us=50, hi_us=150))
        target = PathKey.parse("gateway:request/svc-b:op-b")
        inj = InjectionSpec(target=target, fraction=0.3, delay_us=9000)
        base, _ = generate(topo, 40, seed=9)
        injected, report = generate(topo, 40, seed=9, injections=[inj])
        affected = set(report.affected[0])
        diffs = {a.trace_id: a.response_time - b.response_time
                 for a, b in zip(injected, base)}
        for tid, diff in diffs.items():
            assert diff == (9000 if tid in affected else 0)

    def test_async_injection_leaves_e2e_untouched(self):
        root = TopologyNode(
            rpc=RpcName("ui", "home"), latency=CONST,
            children=(
                TopologyNode(rpc=RpcName("svc", "work"), latency=CONST),
                TopologyNode(rpc=RpcName("svc", "notify"), latency=CONST, kind="async"),
            ))
        topo = TopologySpec(root)
        inj = InjectionSpec(target=PathKey.parse("ui:home/svc:notify"),
                            fraction=1.0, delay_us=7777, propagate=False)
        traces, _ = generate(topo, 6, seed=4, injections=[inj])
        assert {t.response_time for t in traces} == {200}
        for t in traces:
            notify = [s for s in t.spans if s.rpc.operation == "notify"]
            assert all(s.duration == 100 + 7777 for s in notify)

    def test_propagate_false_on_sync_rejected(self):
        topo = const_topology()
        inj = InjectionSpec(target=PathKey.parse("gateway:request/svc-a:op-a"),
                            fraction=0.5, delay_us=100, propagate=False)
        with pytest.raises(TopologyError, match="propagate"):
            generate(topo, 2, seed=0, injections=[inj])

    def test_unknown_target_rejected(self):
        inj = InjectionSpec(target=PathKey.parse("no:where"),
                            fraction=0.5, delay_us=100)
        with pytest.raises(TopologyError):
            generate(const_topology(), 2, seed=0, injections=[inj])

    def test_affected_fraction_within_binomial_bounds(self):
        topo = const_topology(1, 1)
        target = PathKey.parse("gateway:request/svc-a:op-a")
        inj = InjectionSpec(target=target, fraction=0.1, delay_us=100)
        n = 2000
        _, report = generate(topo, n, seed=12, injections=[inj])
        affected = len(report.affected[0])
        # 99.9% interval for Binomial(2000, 0.1)
        sigma = math.sqrt(n * 0.1 * 0.9)
        assert abs(affected - n * 0.1) < 3.29 * sigma

    def test_timestamps_strictly_increasing_across_traces(self):
        traces, _ = generate(const_topology(), 20, seed=5)
        starts = [t.root.start_time for t in traces]
        assert starts == sorted(starts)
        assert len(set(starts)) == len(starts)

    def test_child_spans_within_parents_sync(self):
        traces, _ = generate(const_topology(), 3, seed=6)
        for t in traces:
            for s in t.spans:
                for c in t.children_of(s):
                    assert c.start_time >= s.start_time
                    assert c.start_time + c.duration <= s.start_time + s.duration

    def test_batch_roundtrips_with_zero_warnings(self):
        topo = balanced_topology(3, 2, LatencySpec(kind="lognormal", median_us=300, sigma=0.5))
        traces, _ = generate(topo, 30, seed=8)
        reparsed, warnings = parse_trace_batch(json.dumps(serialize_traces(traces)))
        assert warnings == []
        assert reparsed == traces


class TestDelayForIncrease:
    def test_closed_form_translation(self):
        topo = const_topology()  # E2E 700µs
        target = PathKey.parse("gateway:request/svc-a:op-a/svc-ab:op-ab")
        delay = delay_for_e2e_increase(topo, target, 20)
        assert delay == pytest.approx(140.0)
        inj = InjectionSpec(target=target, fraction=1.0, delay_us=delay)
        traces, _ = generate(topo, 5, seed=0, injections=[inj])
        assert {t.response_time for t in traces} == {840}

    def test_divides_by_occurrences(self):
        root = TopologyNode(
            rpc=RpcName("ui", "home"), latency=CONST,
            children=(TopologyNode(rpc=RpcName("svc", "op"), latency=CONST,
                                   calls=CallCount.fixed(4)),))
        topo = TopologySpec(root)  # E2E 500
        delay = delay_for_e2e_increase(topo, PathKey.parse("ui:home/svc:op"), 16)
        # fires on each of the 4 occurrences → per-occurrence delay is /4
        assert delay == pytest.approx(500 * 0.16 / 4)
        inj = InjectionSpec(target=PathKey.parse("ui:home/svc:op"), fraction=1.0,
                            delay_us=delay)
        traces, _ = generate(topo, 3, seed=1, injections=[inj])
        assert {t.response_time for t in traces} == {580}


class TestMultimode:
    def topo(self):
        root = TopologyNode(
            rpc=RpcName("ui", "queryInfo"), latency=LatencySpec(kind="uniform", lo_us=900, hi_us=1100),
            children=(TopologyNode(rpc=RpcName("svc", "queryForStationId"),
                                   latency=CONST),))
        return TopologySpec(root)

    def test_levels_exactly(self):
        traces, _ = generate_multimode(
            self.topo(), PathKey.parse("ui:queryInfo/svc:queryForStationId"),
            levels=(2, 6, 14), per_occurrence_cost_us=2000, n_traces=120, seed=2)
        levels_seen = set()
        for t in traces:
            records, _ = extract_paths(t)
            target = next(r for r in records if r.path.depth == 2)
            levels_seen.add(target.occurrences)
            assert target.occurrences in (2, 6, 14)
        assert levels_seen == {2, 6, 14}

    def test_single_level_unimodal(self):
        traces, _ = generate_multimode(
            self.topo(), PathKey.parse("ui:queryInfo/svc:queryForStationId"),
            levels=(3,), per_occurrence_cost_us=2000, n_traces=30, seed=3)
        rts = [t.response_time for t in traces]
        assert max(rts) - min(rts) <= 200  # only the root's uniform jitter

    def test_e2e_mode_per_level(self):
        traces, _ = generate_multimode(
            self.topo(), PathKey.parse("ui:queryInfo/svc:queryForStationId"),
            levels=(2, 6, 14), per_occurrence_cost_us=2000, n_traces=200, seed=4)
        by_level = {}
        for t in traces:
            records, _ = extract_paths(t)
            target = next(r for r in records if r.path.depth == 2)
            by_level.setdefault(target.occurrences, []).append(t.response_time)
        centers = {lvl: np.mean(v) for lvl, v in by_level.items()}
        assert centers[2] == pytest.approx(1000 + 2 * 2000, rel=0.05)
        assert centers[6] == pytest.approx(1000 + 6 * 2000, rel=0.02)
        assert centers[14] == pytest.approx(1000 + 14 * 2000, rel=0.01)


class TestAsyncE2eInvariance:
    def test_affected_vs_unaffected_kl_small(self):
        # async injection leaves the E2E marginal unchanged up to noise
        root = TopologyNode(
            rpc=RpcName("ui", "home"),
            latency=LatencySpec(kind="lognormal", median_us=1000, sigma=0.2),
            children=(
                TopologyNode(rpc=RpcName("svc", "work"),
                             latency=LatencySpec(kind="lognormal", median_us=1000, sigma=0.2)),
                TopologyNode(rpc=RpcName("svc", "notify"),
                             latency=LatencySpec(kind="lognormal", median_us=500, sigma=0.2),
                             kind="async"),
            ))
        topo = TopologySpec(root)
        inj = InjectionSpec(target=PathKey.parse("ui:home/svc:notify"),
                            fraction=0.5, delay_us=5000, propagate=False)
        traces, report = generate(topo, 2000, seed=10, injections=[inj])
        affected = set(report.affected[0])
        rt_affected = [t.response_time for t in traces if t.trace_id in affected]
        rt_other = [t.response_time for t in traces if t.trace_id not in affected]
        stat = kl_divergence(rt_affected, rt_other)
        assert stat.status == "ok"
        assert stat.kl < 0.1


class TestInjectionConfig:
    def test_yaml_with_pct_translation(self, tmp_path):
        import yaml
        topo = const_topology()
        topo_file = tmp_path / "topo.yaml"
        topo_file.write_text(yaml.safe_dump(topo.as_dict()))
        inj_file = tmp_path / "inj.yaml"
        inj_file.write_text(yaml.safe_dump([{
            "target": "gateway:request/svc-a:op-a",
            "fraction": 0.25,
            "e2e_increase_pct": 20,
        }]))
        loaded = load_injections(inj_file, load_topology(topo_file))
        assert len(loaded) == 1
        assert loaded[0].fraction == 0.25
        assert loaded[0].delay_us == pytest.approx(140.0)
        assert loaded[0].propagate is True
