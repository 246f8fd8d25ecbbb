"""HTTP API over a read-only store.

Endpoints (all times µs epoch integers; shares and probabilities as
decimal fractions; colors precomputed server-side):

    GET /api/roots?from=&to=&q=
    GET /api/tree?root=&from=&to=&attr=
    GET /api/histogram?root=&from=&to=&bins=
    GET /api/node/clusters?root=&from=&to=&attr=&path=
    GET /api/backward/tree?root=&from=&to=&attr=&lo=&hi=
    GET /api/backward/node?root=&from=&to=&attr=&path=&lo=&hi=

Responses carry a "status" field: "ok", "no data" (empty selection) or
"insufficient-data" (degenerate backward brush). Parameter errors are
HTTP 400, unknown paths 404. The store is immutable while serving, so
identical requests return identical payloads; resolved scopes are kept
in a bounded FIFO cache, which is semantically invisible for that reason.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from . import views
from .errors import UnknownPathError
from .model import RpcName
from .stats import DEFAULT_HIST_BINS
from .store import TraceStore

_SCOPE_CACHE_SIZE = 32


class _ScopeCache:
    def __init__(self, store: TraceStore):
        self.store = store
        self._entries: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def resolve(self, root: RpcName, t0: int, t1: int) -> Optional[views.Scope]:
        key = (root.canonical, t0, t1)
        with self._lock:
            if key in self._entries:
                return self._entries[key]
        scope = views.resolve_scope(self.store, root, t0, t1)
        with self._lock:
            self._entries[key] = scope
            while len(self._entries) > _SCOPE_CACHE_SIZE:
                self._entries.popitem(last=False)
        return scope


def _time_range(t0: Optional[int], t1: Optional[int]) -> tuple[int, int]:
    lo, hi = views.FULL_RANGE
    t0 = lo if t0 is None else t0
    t1 = hi if t1 is None else t1
    if t0 > t1:
        raise ValueError("'from' must be ≤ 'to'")
    return t0, t1


def create_app(store: TraceStore) -> FastAPI:
    app = FastAPI(title="tracelens", docs_url=None, redoc_url=None)
    cache = _ScopeCache(store)

    @app.exception_handler(ValueError)
    async def _bad_request(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"status": "error", "error": str(exc)})

    @app.exception_handler(UnknownPathError)
    async def _not_found(request: Request, exc: UnknownPathError):
        return JSONResponse(status_code=404, content={"status": "error", "error": str(exc)})

    def _scope_or_none(root: str, t0: Optional[int], t1: Optional[int]):
        rpc = RpcName.parse(root)
        lo, hi = _time_range(t0, t1)
        return cache.resolve(rpc, lo, hi), rpc, lo, hi

    @app.get("/api/roots")
    def roots(
        from_: Optional[int] = Query(default=None, alias="from"),
        to: Optional[int] = Query(default=None),
        q: Optional[str] = Query(default=None),
    ):
        lo, hi = _time_range(from_, to)
        return views.roots_payload(store, lo, hi, q)

    @app.get("/api/tree")
    def tree(
        root: str,
        from_: Optional[int] = Query(default=None, alias="from"),
        to: Optional[int] = Query(default=None),
        attr: str = "execution-time",
    ):
        scope, rpc, lo, hi = _scope_or_none(root, from_, to)
        if scope is None:
            return views.no_data_payload(rpc, lo, hi)
        return views.tree_payload(scope, attr)

    @app.get("/api/histogram")
    def histogram(
        root: str,
        from_: Optional[int] = Query(default=None, alias="from"),
        to: Optional[int] = Query(default=None),
        bins: int = DEFAULT_HIST_BINS,
    ):
        scope, rpc, lo, hi = _scope_or_none(root, from_, to)
        if scope is None:
            return views.no_data_payload(rpc, lo, hi)
        return views.histogram_payload(scope, bins)

    @app.get("/api/node/clusters")
    def node_clusters(
        root: str,
        path: str,
        from_: Optional[int] = Query(default=None, alias="from"),
        to: Optional[int] = Query(default=None),
        attr: str = "execution-time",
        bins: int = DEFAULT_HIST_BINS,
    ):
        scope, rpc, lo, hi = _scope_or_none(root, from_, to)
        if scope is None:
            return views.no_data_payload(rpc, lo, hi)
        return views.forward_payload(scope, attr, path, bins)

    @app.get("/api/backward/tree")
    def backward_tree(
        root: str,
        lo: int,
        hi: int,
        from_: Optional[int] = Query(default=None, alias="from"),
        to: Optional[int] = Query(default=None),
        attr: str = "execution-time",
    ):
        scope, rpc, t0, t1 = _scope_or_none(root, from_, to)
        if scope is None:
            return views.no_data_payload(rpc, t0, t1)
        return views.backward_tree_payload(scope, attr, lo, hi)

    @app.get("/api/backward/node")
    def backward_node(
        root: str,
        path: str,
        lo: int,
        hi: int,
        from_: Optional[int] = Query(default=None, alias="from"),
        to: Optional[int] = Query(default=None),
        attr: str = "execution-time",
        bins: int = DEFAULT_HIST_BINS,
    ):
        scope, rpc, t0, t1 = _scope_or_none(root, from_, to)
        if scope is None:
            return views.no_data_payload(rpc, t0, t1)
        return views.backward_node_payload(scope, attr, path, lo, hi, bins)

    return app


def serve(store: TraceStore, host: str = "127.0.0.1", port: int = 8077):
    """Run the API with uvicorn; raises OSError if the port is taken."""
    import socket

    import uvicorn

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    finally:
        probe.close()
    uvicorn.run(create_app(store), host=host, port=port, log_level="warning")
