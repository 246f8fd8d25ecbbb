/**
 * Typed client over the backend endpoints.
 *
 * Each logical view ("slot") keeps at most one request in flight: issuing
 * a request in a slot aborts its predecessor, so stale responses from
 * superseded user input never land.
 */

import type {
  Attribute,
  BackwardNodePayload,
  ClustersPayload,
  HistogramPayload,
  RootsPayload,
  TreePayload,
} from "./types";

export interface Scope {
  root: string;
  from: number | null;
  to: number | null;
  attr: Attribute;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function params(entries: Record<string, string | number | null | undefined>): string {
  const search = new URLSearchParams();
  for (const [key, value] of Object.entries(entries)) {
    if (value !== null && value !== undefined && value !== "") {
      search.set(key, String(value));
    }
  }
  return search.toString();
}

export class ApiClient {
  private controllers = new Map<string, AbortController>();

  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(slot: string, path: string, query: string): Promise<T> {
    this.controllers.get(slot)?.abort();
    const controller = new AbortController();
    this.controllers.set(slot, controller);
    const url = `${this.baseUrl}${path}?${query}`;
    const response = await this.fetchFn(url, { signal: controller.signal });
    if (!response.ok && response.status !== 200) {
      const body = await response.json().catch(() => ({}));
      throw new Error(body.error ?? `${path} failed with ${response.status}`);
    }
    return (await response.json()) as T;
  }

  roots(q?: string, from?: number | null, to?: number | null): Promise<RootsPayload> {
    return this.get("roots", "/api/roots", params({ q, from, to }));
  }

  tree(scope: Scope): Promise<TreePayload> {
    return this.get("tree", "/api/tree", params({
      root: scope.root, from: scope.from, to: scope.to, attr: scope.attr,
    }));
  }

  histogram(scope: Scope, bins?: number): Promise<HistogramPayload> {
    return this.get("histogram", "/api/histogram", params({
      root: scope.root, from: scope.from, to: scope.to, bins,
    }));
  }

  nodeClusters(scope: Scope, path: string): Promise<ClustersPayload> {
    return this.get("clusters", "/api/node/clusters", params({
      root: scope.root, from: scope.from, to: scope.to, attr: scope.attr, path,
    }));
  }

  backwardTree(scope: Scope, lo: number, hi: number): Promise<TreePayload> {
    return this.get("tree", "/api/backward/tree", params({
      root: scope.root, from: scope.from, to: scope.to, attr: scope.attr, lo, hi,
    }));
  }

  backwardNode(
    scope: Scope, path: string, lo: number, hi: number,
  ): Promise<BackwardNodePayload> {
    return this.get("backwardNode", "/api/backward/node", params({
      root: scope.root, from: scope.from, to: scope.to, attr: scope.attr,
      path, lo, hi,
    }));
  }
}
