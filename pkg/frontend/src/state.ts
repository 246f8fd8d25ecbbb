/**
 * Dashboard state and its URL form.
 *
 * Every analysis state round-trips through the query string, so views are
 * deep-linkable. Node collapse is presentation-only and deliberately left
 * out of links. Invariants: backward mode always carries a brush range;
 * a cluster selection always accompanies a selected path.
 */

import type { Attribute } from "./types";

export type Mode = "forward" | "backward";

export interface UiState {
  root: string | null;
  from: number | null;      // µs; null = unbounded
  to: number | null;
  attr: Attribute;
  mode: Mode;
  path: string | null;      // selected execution path
  cluster: number | null;   // selected forward bar
  brush: [number, number] | null;  // µs bounds, backward mode
  collapsed: Set<string>;   // client-only
}

export function initialState(): UiState {
  return {
    root: null,
    from: null,
    to: null,
    attr: "execution-time",
    mode: "forward",
    path: null,
    cluster: null,
    brush: null,
    collapsed: new Set(),
  };
}

export function serializeState(state: UiState): string {
  const q = new URLSearchParams();
  if (state.root) q.set("root", state.root);
  if (state.from !== null) q.set("from", String(state.from));
  if (state.to !== null) q.set("to", String(state.to));
  q.set("attr", state.attr);
  q.set("mode", state.mode);
  if (state.path) q.set("path", state.path);
  if (state.cluster !== null) q.set("cluster", String(state.cluster));
  if (state.brush) {
    q.set("lo", String(state.brush[0]));
    q.set("hi", String(state.brush[1]));
  }
  return q.toString();
}

export function parseState(query: string): UiState {
  const q = new URLSearchParams(query);
  const state = initialState();
  state.root = q.get("root");
  if (q.has("from")) state.from = Number(q.get("from"));
  if (q.has("to")) state.to = Number(q.get("to"));
  if (q.get("attr") === "frequency") state.attr = "frequency";
  state.path = q.get("path");
  if (q.has("cluster") && state.path) state.cluster = Number(q.get("cluster"));
  if (q.has("lo") && q.has("hi")) {
    state.brush = [Number(q.get("lo")), Number(q.get("hi"))];
  }
  // backward requires a brush; without one fall back to forward
  state.mode = q.get("mode") === "backward" && state.brush ? "backward" : "forward";
  return state;
}

export function enterBackward(state: UiState, lo: number, hi: number): UiState {
  return { ...state, mode: "backward", brush: [lo, hi], cluster: null };
}

export function clearBrush(state: UiState): UiState {
  return { ...state, mode: "forward", brush: null };
}

export function selectPath(state: UiState, path: string | null): UiState {
  return { ...state, path, cluster: null };
}

export function selectCluster(state: UiState, cluster: number | null): UiState {
  if (cluster !== null && !state.path) {
    throw new Error("cluster selection requires a selected path");
  }
  return { ...state, cluster };
}

export function toggleCollapsed(state: UiState, path: string): UiState {
  const collapsed = new Set(state.collapsed);
  if (collapsed.has(path)) collapsed.delete(path);
  else collapsed.add(path);
  return { ...state, collapsed };
}
