// @vitest-environment jsdom
import { describe, expect, it, vi } from "vitest";

import { renderTree } from "../src/tree";
import type { TreeNodePayload } from "../src/types";

const nodes: TreeNodePayload[] = [
  { path: "r:x", parent: null, kind: "root", support: 10, cv: 0.0,
    color: "#ffffff" },
  { path: "r:x/a:y", parent: "r:x", kind: "sync", support: 10, cv: 0.5,
    color: "#ff8080" },
  { path: "r:x/a:y/b:z", parent: "r:x/a:y", kind: "async", support: 4,
    kl: null, kl_status: "insufficient-data", color: "#c8c8c8" },
];

function circleFills(container: HTMLElement): Map<string, string> {
  const fills = new Map<string, string>();
  container.querySelectorAll("g.tree-node").forEach((g) => {
    const path = g.getAttribute("data-path")!;
    const fill = g.querySelector("circle")!.getAttribute("fill")!;
    fills.set(path, fill);
  });
  return fills;
}

describe("tree rendering", () => {
  it("applies server-provided colors verbatim, including grey", () => {
    const container = document.createElement("div");
    renderTree(container, nodes, new Set(), null,
      { onNodeClick: () => {}, onNodeDblClick: () => {} });
    const fills = circleFills(container);
    expect(fills.get("r:x")).toBe("#ffffff");
    expect(fills.get("r:x/a:y")).toBe("#ff8080");
    expect(fills.get("r:x/a:y/b:z")).toBe("#c8c8c8");
  });

  it("places the root leftmost", () => {
    const container = document.createElement("div");
    renderTree(container, nodes, new Set(), null,
      { onNodeClick: () => {}, onNodeDblClick: () => {} });
    const xOf = (path: string) => {
      const g = container.querySelector(`g.tree-node[data-path="${path}"]`)!;
      return Number(/translate\(([-\d.]+),/.exec(g.getAttribute("transform")!)![1]);
    };
    expect(xOf("r:x")).toBeLessThan(xOf("r:x/a:y"));
    expect(xOf("r:x/a:y")).toBeLessThan(xOf("r:x/a:y/b:z"));
  });

  it("collapse hides the subtree and expand restores it", () => {
    const container = document.createElement("div");
    const callbacks = { onNodeClick: () => {}, onNodeDblClick: () => {} };
    renderTree(container, nodes, new Set(["r:x/a:y"]), null, callbacks);
    expect(circleFills(container).has("r:x/a:y/b:z")).toBe(false);
    expect(circleFills(container).size).toBe(2);

    renderTree(container, nodes, new Set(), null, callbacks);
    expect(circleFills(container).has("r:x/a:y/b:z")).toBe(true);
    expect(circleFills(container).size).toBe(3);
  });

  it("fires click and double-click callbacks with the node path", () => {
    const container = document.createElement("div");
    const onNodeClick = vi.fn();
    const onNodeDblClick = vi.fn();
    renderTree(container, nodes, new Set(), null, { onNodeClick, onNodeDblClick });
    const target = container.querySelector('g.tree-node[data-path="r:x/a:y"]')!;
    target.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    target.dispatchEvent(new MouseEvent("dblclick", { bubbles: true }));
    expect(onNodeClick).toHaveBeenCalledWith("r:x/a:y");
    expect(onNodeDblClick).toHaveBeenCalledWith("r:x/a:y");
  });

  it("renders a placeholder for empty payloads", () => {
    const container = document.createElement("div");
    renderTree(container, undefined, new Set(), null,
      { onNodeClick: () => {}, onNodeDblClick: () => {} });
    expect(container.textContent).toContain("no data");
  });
});
