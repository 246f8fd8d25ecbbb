import { describe, expect, it } from "vitest";

import type { UiState } from "../src/state";
import {
  clearBrush,
  enterBackward,
  initialState,
  parseState,
  selectCluster,
  selectPath,
  serializeState,
  toggleCollapsed,
} from "../src/state";

describe("state URL round-trip", () => {
  it("serializes and parses a full backward view", () => {
    let state = initialState();
    state = { ...state, root: "gateway:request", from: 1000, to: 9999,
              attr: "frequency" };
    state = selectPath(state, "gateway:request/svc-a:op-a");
    state = enterBackward(state, 47000, 60000);
    const query = serializeState(state);
    const parsed = parseState(query);
    expect(parsed.root).toBe("gateway:request");
    expect(parsed.from).toBe(1000);
    expect(parsed.to).toBe(9999);
    expect(parsed.attr).toBe("frequency");
    expect(parsed.mode).toBe("backward");
    expect(parsed.path).toBe("gateway:request/svc-a:op-a");
    expect(parsed.brush).toEqual([47000, 60000]);
  });

  it("serializes a forward cluster selection", () => {
    let state: UiState = { ...initialState(), root: "r:x" };
    state = selectPath(state, "r:x/s:y");
    state = selectCluster(state, 1);
    const parsed = parseState(serializeState(state));
    expect(parsed.mode).toBe("forward");
    expect(parsed.cluster).toBe(1);
    expect(parsed.path).toBe("r:x/s:y");
  });

  it("excludes collapse state from links", () => {
    let state: UiState = { ...initialState(), root: "r:x" };
    state = toggleCollapsed(state, "r:x/s:y");
    expect(serializeState(state)).not.toContain("s%3Ay");
    expect(parseState(serializeState(state)).collapsed.size).toBe(0);
  });

  it("backward mode without a brush falls back to forward", () => {
    const parsed = parseState("root=r%3Ax&mode=backward");
    expect(parsed.mode).toBe("forward");
    expect(parsed.brush).toBeNull();
  });

  it("cluster selection requires a path", () => {
    expect(() => selectCluster(initialState(), 0)).toThrow();
    const parsed = parseState("root=r%3Ax&cluster=2&mode=forward");
    expect(parsed.cluster).toBeNull();
  });

  it("clearing the brush returns to forward and keeps the path", () => {
    let state: UiState = { ...initialState(), root: "r:x" };
    state = selectPath(state, "r:x/s:y");
    state = enterBackward(state, 10, 20);
    state = clearBrush(state);
    expect(state.mode).toBe("forward");
    expect(state.brush).toBeNull();
    expect(state.path).toBe("r:x/s:y");
  });
});
