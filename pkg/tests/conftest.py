"""Shared fixtures and the acceptance-suite result banner."""

import json

import pytest

from tracelens import (
    LatencySpec,
    RpcName,
    SpanRecord,
    RefKind,
    TraceStore,
    balanced_topology,
    generate,
    serialize_traces,
    validate_trace,
)

_acceptance_results = []


def record_acceptance(name: str):
    """Mark the calling acceptance test for the end-of-run banner."""
    _acceptance_results.append(name)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance" in str(item.fspath):
        status = "PASS" if report.passed else "FAIL"
        item.session.config._acceptance_lines = getattr(
            item.session.config, "_acceptance_lines", [])
        item.session.config._acceptance_lines.append(f"[{status}] {item.name}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


def make_span(trace_id, span_id, service, operation, parent=None,
              kind=RefKind.CHILD, start=1_000_000, duration=100):
    if parent is None:
        kind = RefKind.ROOT
    return SpanRecord(
        trace_id=trace_id,
        span_id=span_id,
        rpc=RpcName(service, operation),
        parent_span_id=parent,
        ref_kind=kind,
        start_time=start,
        duration=duration,
    )


@pytest.fixture
def simple_trace():
    """A(100µs) with children B(20), B(30), C(30): the hand-computable
    sibling-collapse example."""
    spans = [
        make_span("t1", "a", "ui", "home", start=1_000_000, duration=100),
        make_span("t1", "b1", "svc", "b", parent="a", start=1_000_010, duration=20),
        make_span("t1", "b2", "svc", "b", parent="a", start=1_000_040, duration=30),
        make_span("t1", "c1", "svc", "c", parent="a", start=1_000_080, duration=30),
    ]
    return validate_trace(spans)


@pytest.fixture
def small_corpus(tmp_path):
    """40 deterministic traces over a depth-2/fanout-2 topology, written as
    a Jaeger file and preprocessed into a store."""
    topo = balanced_topology(2, 2, LatencySpec(kind="lognormal", median_us=1000, sigma=0.25))
    traces, _ = generate(topo, 40, seed=7)
    trace_file = tmp_path / "traces.json"
    trace_file.write_text(json.dumps(serialize_traces(traces)))

    from tracelens import preprocess_batch

    store = TraceStore.create(tmp_path / "store")
    summary = preprocess_batch([trace_file], store)
    return {
        "topology": topo,
        "traces": traces,
        "trace_file": trace_file,
        "store": store,
        "summary": summary,
        "root": topo.root.rpc,
    }
