/**
 * Canned backend payloads and a request-capturing fetch.
 *
 * The fixture store mirrors a small two-level topology with one "hot"
 * node; shapes follow the backend's documented schema exactly.
 */

import type { FetchLike } from "../src/api";

export const ROOT = "gateway:request";
export const HOT = "gateway:request/svc-b:op-b";
export const COLD = "gateway:request/svc-a:op-a";

const treeNodes = [
  { path: ROOT, parent: null, kind: "root", support: 100, cv: 0.05,
    n_used: 99, n_filtered: 1, color: "#fff2f2", rgb: [255, 242, 242] },
  { path: COLD, parent: ROOT, kind: "sync", support: 100, cv: 0.2,
    n_used: 99, n_filtered: 1, color: "#ffcccc", rgb: [255, 204, 204] },
  { path: HOT, parent: ROOT, kind: "sync", support: 100, cv: 1.4,
    n_used: 99, n_filtered: 1, color: "#ff0000", rgb: [255, 0, 0] },
];

const backwardNodes = [
  { path: ROOT, parent: null, kind: "root", support: 100, kl: 5.2,
    kl_status: "ok", n_selected: 10, n_other: 90, color: "#ff0000",
    rgb: [255, 0, 0], selection_basis: true },
  { path: COLD, parent: ROOT, kind: "sync", support: 100, kl: 0.04,
    kl_status: "ok", n_selected: 10, n_other: 90, color: "#fff5f5",
    rgb: [255, 245, 245], selection_basis: false },
  { path: HOT, parent: ROOT, kind: "sync", support: 100, kl: null,
    kl_status: "insufficient-data", n_selected: 3, n_other: 97,
    color: "#c8c8c8", rgb: [200, 200, 200], selection_basis: false },
];

const edges = [1000, 2000, 3000, 4000, 5000];

export const payloads: Record<string, (params: URLSearchParams) => unknown> = {
  "/api/roots": () => ({
    status: "ok",
    roots: [{ root: ROOT, count: 100 }],
  }),
  "/api/tree": () => ({
    status: "ok", root: ROOT, attr: "execution-time",
    request_count: 100, nodes: treeNodes,
  }),
  "/api/histogram": () => ({
    status: "ok", root: ROOT, bins: 4, edges, counts: [40, 30, 20, 10],
    total: 100,
  }),
  "/api/node/clusters": (params) => ({
    status: "ok", path: params.get("path"), attr: params.get("attr"),
    support: 100, n_clustered: 99, n_filtered: 1, k: 2, silhouette: 0.93,
    clusters: [
      { lo: 800, hi: 1500, size: 90, share: 0.9,
        member_trace_ids: ["t1"], highlight: [40, 30, 15, 0] },
      { lo: 9000, hi: 9600, size: 10, share: 0.1,
        member_trace_ids: ["t2"], highlight: [0, 0, 5, 10] },
    ],
    histogram: { edges, counts: [40, 30, 20, 10] },
  }),
  "/api/backward/tree": (params) => ({
    status: "ok", root: ROOT, attr: params.get("attr"),
    lo: Number(params.get("lo")), hi: Number(params.get("hi")),
    n_selected: 10, n_other: 90, request_count: 100, nodes: backwardNodes,
  }),
  "/api/backward/node": (params) => ({
    status: "ok", path: params.get("path"), attr: params.get("attr"),
    lo: Number(params.get("lo")), hi: Number(params.get("hi")),
    edges, selected_counts: [0, 1, 4, 5], other_counts: [40, 29, 16, 5],
    n_selected: 10, n_other: 90, kl: 3.2, kl_status: "ok",
  }),
};

export interface CapturedRequest {
  url: string;
  pathname: string;
  params: URLSearchParams;
  signal: AbortSignal | undefined;
}

export function captureFetch(): { fetchFn: FetchLike; requests: CapturedRequest[] } {
  const requests: CapturedRequest[] = [];
  const fetchFn: FetchLike = (url, init) => {
    const parsed = new URL(url, "http://test.local");
    requests.push({
      url,
      pathname: parsed.pathname,
      params: parsed.searchParams,
      signal: init?.signal ?? undefined,
    });
    const maker = payloads[parsed.pathname];
    if (!maker) {
      return Promise.resolve(
        new Response(JSON.stringify({ status: "error", error: "not found" }),
          { status: 404 }));
    }
    return Promise.resolve(
      new Response(JSON.stringify(maker(parsed.searchParams)), { status: 200 }));
  };
  return { fetchFn, requests };
}
