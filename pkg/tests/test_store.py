"""Store contracts: durability, closed-interval windows, full-scan oracles,
deterministic ordering, version refusal."""

import json

import pytest

from tracelens import (
    E2ERecord,
    LatencySpec,
    RpcName,
    TraceStore,
    balanced_topology,
    extract_paths,
    generate,
)
from tracelens.errors import StoreError, StoreVersionError

ROOT = RpcName("gateway", "request")
FULL = (0, 1 << 62)


def records_for(traces):
    paths, e2es = [], []
    for t in traces:
        p, e = extract_paths(t)
        paths.extend(p)
        e2es.append(e)
    return paths, e2es


@pytest.fixture
def corpus():
    topo = balanced_topology(2, 2, LatencySpec(kind="uniform", lo_us=50, hi_us=900))
    traces, _ = generate(topo, 30, seed=13)
    return traces


class TestAppend:
    def test_zero_records_noop_commit(self, tmp_path):
        store = TraceStore.create(tmp_path / "s")
        receipt = store.append_records([], [])
        assert receipt.path_records == 0 and receipt.e2e_records == 0
        assert store.manifest["segments"] == []

    def test_append_then_reopen_returns_exactly(self, tmp_path, corpus):
        paths, e2es = records_for(corpus)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)

        reopened = TraceStore.open(tmp_path / "s")
        got_paths = list(reopened.query_paths(ROOT, *FULL))
        got_e2e = list(reopened.query_e2e(ROOT, *FULL))
        assert sorted(got_paths, key=lambda r: (r.trace_id, r.path.canonical)) == \
            sorted(paths, key=lambda r: (r.trace_id, r.path.canonical))
        assert sorted(got_e2e, key=lambda r: r.trace_id) == \
            sorted(e2es, key=lambda r: r.trace_id)

    def test_two_commits_union_visible(self, tmp_path, corpus):
        half = len(corpus) // 2
        p1, e1 = records_for(corpus[:half])
        p2, e2 = records_for(corpus[half:])
        store = TraceStore.create(tmp_path / "s")
        store.append_records(p1, e1)
        store.append_records(p2, e2)
        all_ids = {r.trace_id for r in store.query_e2e(ROOT, *FULL)}
        assert all_ids == {t.trace_id for t in corpus}

    def test_manifest_counts_match_store(self, tmp_path, corpus):
        paths, e2es = records_for(corpus)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)
        counts = store.manifest["roots"][ROOT.canonical]
        assert counts["path_records"] == len(list(store.query_paths(ROOT, *FULL)))
        assert counts["e2e_records"] == len(list(store.query_e2e(ROOT, *FULL)))

    def test_create_twice_refused(self, tmp_path):
        TraceStore.create(tmp_path / "s")
        with pytest.raises(StoreError):
            TraceStore.create(tmp_path / "s")


class TestListRoots:
    def test_single_root_count(self, tmp_path, corpus):
        paths, e2es = records_for(corpus[:10])
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)
        assert store.list_roots(*FULL) == [(ROOT, 10)]

    def test_window_before_everything(self, tmp_path, corpus):
        paths, e2es = records_for(corpus)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)
        t_min = min(r.timestamp for r in e2es)
        assert store.list_roots(0, t_min - 1) == []

    def test_mixed_roots_match_full_scan(self, tmp_path):
        topo_a = balanced_topology(
            1, 2, LatencySpec(kind="constant", value_us=100),
            root_rpc=RpcName("ui", "queryInfo"))
        topo_b = balanced_topology(
            1, 1, LatencySpec(kind="constant", value_us=50),
            root_rpc=RpcName("ui", "getByCheapest"))
        traces_a, _ = generate(topo_a, 10, seed=1)
        traces_b, _ = generate(topo_b, 7, seed=2)
        pa, ea = records_for(traces_a)
        pb, eb = records_for(traces_b)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(pa + pb, ea + eb)
        expected = {}
        for rec in ea + eb:
            expected[rec.root_rpc] = expected.get(rec.root_rpc, 0) + 1
        assert dict(store.list_roots(*FULL)) == expected


class TestWindowQueries:
    def test_half_window_matches_full_scan_filter(self, tmp_path, corpus):
        paths, e2es = records_for(corpus)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)
        stamps = sorted(r.timestamp for r in e2es)
        t0, t1 = stamps[0], stamps[len(stamps) // 2]
        got = list(store.query_e2e(ROOT, t0, t1))
        expected = [r for r in e2es if t0 <= r.timestamp <= t1]
        assert sorted(got, key=lambda r: r.trace_id) == \
            sorted(expected, key=lambda r: r.trace_id)
        got_p = list(store.query_paths(ROOT, t0, t1))
        expected_p = [r for r in paths if t0 <= r.timestamp <= t1]
        assert len(got_p) == len(expected_p)
        assert {r.trace_id for r in got_p} == {r.trace_id for r in expected_p}

    def test_point_window_closed_interval(self, tmp_path, corpus):
        paths, e2es = records_for(corpus)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)
        target = e2es[5]
        got = list(store.query_e2e(ROOT, target.timestamp, target.timestamp))
        assert [r.trace_id for r in got] == [target.trace_id]
        got_p = list(store.query_paths(ROOT, target.timestamp, target.timestamp))
        assert {r.trace_id for r in got_p} == {target.trace_id}

    def test_unknown_root_empty_stream(self, tmp_path, corpus):
        paths, e2es = records_for(corpus)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)
        assert list(store.query_paths(RpcName("no", "such"), *FULL)) == []
        assert list(store.query_e2e(RpcName("no", "such"), *FULL)) == []

    def test_t0_greater_than_t1_rejected(self, tmp_path):
        store = TraceStore.create(tmp_path / "s")
        with pytest.raises(ValueError):
            list(store.query_e2e(ROOT, 10, 5))

    def test_deterministic_order_repeatable(self, tmp_path, corpus):
        paths, e2es = records_for(corpus)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)
        first = [(r.timestamp, r.trace_id, r.path.canonical)
                 for r in store.query_paths(ROOT, *FULL)]
        second = [(r.timestamp, r.trace_id, r.path.canonical)
                  for r in store.query_paths(ROOT, *FULL)]
        assert first == second
        assert first == sorted(first)

    def test_paths_trace_ids_subset_of_e2e(self, tmp_path, corpus):
        paths, e2es = records_for(corpus)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)
        p_ids = {r.trace_id for r in store.query_paths(ROOT, *FULL)}
        e_ids = {r.trace_id for r in store.query_e2e(ROOT, *FULL)}
        assert p_ids == e_ids  # no mid-write skips in this corpus


class TestVersioning:
    def test_version_mismatch_refused(self, tmp_path):
        TraceStore.create(tmp_path / "s")
        manifest_file = tmp_path / "s" / "manifest.json"
        manifest = json.loads(manifest_file.read_text())
        manifest["format_version"] = 999
        manifest_file.write_text(json.dumps(manifest))
        with pytest.raises(StoreVersionError):
            TraceStore.open(tmp_path / "s")

    def test_open_missing_store(self, tmp_path):
        with pytest.raises(StoreError):
            TraceStore.open(tmp_path / "nope")

    def test_inspect_mentions_version_and_counts(self, tmp_path, corpus):
        paths, e2es = records_for(corpus)
        store = TraceStore.create(tmp_path / "s")
        store.append_records(paths, e2es)
        text = store.inspect()
        assert "format_version: 1" in text
        assert ROOT.canonical in text
