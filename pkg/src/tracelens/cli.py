"""Operator entry point.

    tracelens preprocess --input traces.json ... --store DIR
    tracelens serve --store DIR [--host H] [--port P]
    tracelens report forward --store DIR --root R --path P [--attr A] [...]
    tracelens report backward --store DIR --root R --lo L --hi H [...]
    tracelens generate --topology topo.yaml [--injections inj.yaml]
                       --n N --seed S --out traces.json [--affected-out f.json]
    tracelens store inspect DIR

Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
Time-range flags accept µs epoch integers or RFC 3339 timestamps.
Structured (--format json) report output is identical to the HTTP API
payload for the same query.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

from . import views
from .errors import (
    EmptySelectionError,
    ParseError,
    StoreError,
    StoreVersionError,
    TopologyError,
    TraceLensError,
    TraceValidationError,
    UnknownPathError,
    UnsupportedFormatError,
)
from .model import RpcName, serialize_traces
from .paths import PathKey, preprocess_batch
from .stats import DEFAULT_HIST_BINS
from .store import TraceStore
from .synth import generate, load_injections, load_topology

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def parse_time(text: str) -> int:
    """µs epoch integer, or an RFC 3339 timestamp normalized to µs."""
    try:
        return int(text)
    except ValueError:
        pass
    normalized = text.replace("Z", "+00:00") if text.endswith("Z") else text
    try:
        dt = datetime.fromisoformat(normalized)
    except ValueError:
        raise ValueError(f"not a µs integer or RFC 3339 timestamp: {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp() * 1_000_000)


def _add_scope_args(p: argparse.ArgumentParser):
    p.add_argument("--store", required=True, help="store directory")
    p.add_argument("--root", required=True, help="root RPC, canonical service:operation")
    p.add_argument("--from", dest="t0", default=None, metavar="TIME",
                   help="range start (µs epoch or RFC 3339); default: everything")
    p.add_argument("--to", dest="t1", default=None, metavar="TIME",
                   help="range end; default: everything")
    p.add_argument("--attr", default="execution-time",
                   choices=["execution-time", "frequency"])
    p.add_argument("--format", default="text", choices=["text", "json"])
    p.add_argument("--bins", type=int, default=DEFAULT_HIST_BINS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tracelens", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="extract path/e2e records from trace files")
    p.add_argument("--input", required=True, nargs="+", help="Jaeger export files")
    p.add_argument("--store", required=True)

    p = sub.add_parser("serve", help="serve the dashboard API")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8077)

    p = sub.add_parser("report", help="headless forward/backward analysis")
    rsub = p.add_subparsers(dest="mode", required=True)
    fwd = rsub.add_parser("forward", help="attribute clusters for one path")
    _add_scope_args(fwd)
    fwd.add_argument("--path", required=True, help="canonical execution path")
    bwd = rsub.add_parser("backward", help="nodes ranked by divergence over a brushed range")
    _add_scope_args(bwd)
    bwd.add_argument("--lo", required=True, metavar="TIME", help="brush start (µs or RFC 3339)")
    bwd.add_argument("--hi", required=True, metavar="TIME", help="brush end")
    bwd.add_argument("--path", default=None, help="also print this node's detail histograms")

    p = sub.add_parser("generate", help="generate a synthetic trace corpus")
    p.add_argument("--topology", required=True, help="topology YAML file")
    p.add_argument("--injections", default=None, help="injection YAML file")
    p.add_argument("--n", type=int, required=True, help="number of traces")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output trace file")
    p.add_argument("--affected-out", default=None,
                   help="write ground-truth affected trace ids as JSON")

    p = sub.add_parser("store", help="store management")
    ssub = p.add_subparsers(dest="store_command", required=True)
    ins = ssub.add_parser("inspect", help="dump the store manifest")
    ins.add_argument("location")

    return parser


def _resolve(args) -> views.Scope:
    store = TraceStore.open(args.store)
    root = RpcName.parse(args.root)
    t0 = parse_time(args.t0) if args.t0 is not None else views.FULL_RANGE[0]
    t1 = parse_time(args.t1) if args.t1 is not None else views.FULL_RANGE[1]
    scope = views.resolve_scope(store, root, t0, t1)
    if scope is None:
        raise EmptySelectionError(
            f"no data for root {root.canonical} in [{t0}, {t1}]")
    return scope


def cmd_preprocess(args) -> int:
    store = TraceStore.open_or_create(args.store)
    warnings: list = []
    summary = preprocess_batch(args.input, store, warnings_out=warnings)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(json.dumps(summary.as_dict()))
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import serve

    store = TraceStore.open(args.store)
    serve(store, host=args.host, port=args.port)
    return EXIT_OK


def _print_forward_text(payload: dict):
    print(f"forward analysis: {payload['path']} ({payload['attr']})")
    print(f"  requests {payload['support']}, clustered {payload['n_clustered']} "
          f"(p99-filtered {payload['n_filtered']})")
    sil = payload["silhouette"]
    if payload["k"] == 1:
        print("  k=1: no distinct behaviors")
    else:
        print(f"  k={payload['k']} silhouette={sil:.4f}")
    if payload["attr"] == "frequency":
        def fmt(c):
            return f"{c['lo']:g} to {c['hi']:g} invocations"
    else:
        def fmt(c):
            return f"{c['lo']:.2f} to {c['hi']:.2f} µs"
    for i, c in enumerate(payload["clusters"]):
        mask_total = sum(c["highlight"])
        print(f"  cluster {i}: {fmt(c)}, "
              f"{c['share'] * 100:.2f}% of requests "
              f"({c['size']} traces, {mask_total} highlighted)")


def _print_backward_text(payload: dict, detail: dict | None):
    print(f"backward analysis: e2e in [{payload['lo']}, {payload['hi']}] µs "
          f"({payload['n_selected']} selected / {payload['n_other']} other)")
    ranked = views.backward_ranking(payload)
    root_node = next(n for n in payload["nodes"] if n["selection_basis"])
    kl = root_node["kl"]
    print(f"  root {root_node['path']}: kl={kl:.4f} (selection basis, unranked)"
          if kl is not None else f"  root {root_node['path']}: {root_node['kl_status']}")
    for i, n in enumerate(ranked, start=1):
        if n["kl"] is None:
            print(f"  #{i} {n['path']}: {n['kl_status']}")
        else:
            print(f"  #{i} {n['path']}: kl={n['kl']:.4f}")
    if detail is not None:
        print(f"  detail {detail['path']}: n_selected={detail['n_selected']} "
              f"n_other={detail['n_other']} kl={detail['kl']:.4f}")


def cmd_report(args) -> int:
    scope = _resolve(args)
    if args.mode == "forward":
        payload = views.forward_payload(scope, args.attr, args.path, args.bins)
        if args.format == "json":
            print(json.dumps(payload))
        else:
            _print_forward_text(payload)
        return EXIT_OK

    lo, hi = parse_time(args.lo), parse_time(args.hi)
    payload = views.backward_tree_payload(scope, args.attr, lo, hi)
    if payload["status"] != "ok":
        print(f"error: {payload['status']} for brush [{lo}, {hi}]", file=sys.stderr)
        return EXIT_DATA
    detail = None
    if args.path:
        detail = views.backward_node_payload(scope, args.attr, args.path, lo, hi, args.bins)
    if args.format == "json":
        out = dict(payload)
        out["ranked"] = views.backward_ranking(payload)
        if detail is not None:
            out["detail"] = detail
        print(json.dumps(out))
    else:
        _print_backward_text(payload, detail)
    return EXIT_OK


def cmd_generate(args) -> int:
    topology = load_topology(args.topology)
    injections = load_injections(args.injections, topology) if args.injections else []
    traces, report = generate(topology, args.n, injections, seed=args.seed)
    with open(args.out, "w") as f:
        json.dump(serialize_traces(traces), f)
    if args.affected_out:
        with open(args.affected_out, "w") as f:
            json.dump(report.as_dict(injections), f, indent=1)
    print(json.dumps({"traces": len(traces), "out": args.out,
                      "affected": {inj.target.canonical: len(ids)
                                   for inj, ids in zip(injections, report.affected)}}))
    return EXIT_OK


def cmd_store(args) -> int:
    if args.store_command == "inspect":
        print(TraceStore.open(args.location).inspect())
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "preprocess": cmd_preprocess,
        "serve": cmd_serve,
        "report": cmd_report,
        "generate": cmd_generate,
        "store": cmd_store,
    }
    try:
        return handlers[args.command](args)
    except (ParseError, UnsupportedFormatError, TraceValidationError,
            EmptySelectionError, UnknownPathError, TopologyError,
            StoreVersionError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (StoreError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except TraceLensError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
