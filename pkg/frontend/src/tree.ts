/**
 * The aggregated call tree, drawn left to right (root leftmost).
 *
 * Node fills come verbatim from the server payload: the UI never
 * recomputes a color. Double-click collapses or expands a subtree
 * (client-side only); drag and wheel pan/zoom the whole tree.
 */

import * as d3 from "d3";

import type { TreeNodePayload } from "./types";

export interface TreeCallbacks {
  onNodeClick: (path: string) => void;
  onNodeDblClick: (path: string) => void;
}

interface TreeDatum {
  payload: TreeNodePayload;
  children?: TreeDatum[];
}

function buildHierarchy(
  nodes: TreeNodePayload[],
  collapsed: Set<string>,
): TreeDatum | null {
  const byPath = new Map<string, TreeDatum>(
    nodes.map((n) => [n.path, { payload: n }]),
  );
  let root: TreeDatum | null = null;
  for (const node of nodes) {
    const datum = byPath.get(node.path)!;
    if (node.parent === null) {
      root = datum;
    } else if (!collapsed.has(node.parent)) {
      // children of collapsed nodes stay unlinked, detaching the subtree
      const parent = byPath.get(node.parent);
      if (parent) (parent.children ??= []).push(datum);
    }
  }
  return root;
}

export function renderTree(
  container: HTMLElement,
  nodes: TreeNodePayload[] | undefined,
  collapsed: Set<string>,
  selectedPath: string | null,
  callbacks: TreeCallbacks,
): void {
  container.replaceChildren();
  if (!nodes || nodes.length === 0) {
    const placeholder = document.createElement("div");
    placeholder.className = "placeholder";
    placeholder.textContent = "no data";
    container.appendChild(placeholder);
    return;
  }

  const rootDatum = buildHierarchy(nodes, collapsed);
  if (!rootDatum) return;
  const hierarchy = d3.hierarchy<TreeDatum>(rootDatum);
  const width = container.clientWidth || 760;
  const height = Math.max(
    container.clientHeight || 420,
    hierarchy.descendants().length * 14,
  );
  const layout = d3.tree<TreeDatum>().size([height - 40, width - 260]);
  const laid = layout(hierarchy);

  const svg = d3
    .select(container)
    .append("svg")
    .attr("class", "tree-svg")
    .attr("width", width)
    .attr("height", height);
  const g = svg.append("g").attr("transform", "translate(110,20)");

  svg.call(
    d3.zoom<SVGSVGElement, unknown>()
      .scaleExtent([0.3, 4])
      .on("zoom", (event) => g.attr("transform", event.transform)),
  );

  g.append("g")
    .selectAll("path")
    .data(laid.links())
    .join("path")
    .attr("fill", "none")
    .attr("stroke", "#999")
    .attr("stroke-width", (d) => (d.target.data.payload.kind === "async" ? 1 : 1.5))
    .attr("stroke-dasharray", (d) =>
      d.target.data.payload.kind === "async" ? "4 3" : null)
    .attr("d", d3.linkHorizontal<d3.HierarchyPointLink<TreeDatum>, [number, number]>()
      .source((d) => [d.source.y, d.source.x])
      .target((d) => [d.target.y, d.target.x]) as never);

  const node = g
    .append("g")
    .selectAll("g")
    .data(laid.descendants())
    .join("g")
    .attr("class", "tree-node")
    .attr("data-path", (d) => d.data.payload.path)
    .attr("transform", (d) => `translate(${d.y},${d.x})`)
    .style("cursor", "pointer")
    .on("click", (_event, d) => callbacks.onNodeClick(d.data.payload.path))
    .on("dblclick", (event, d) => {
      event.stopPropagation();
      callbacks.onNodeDblClick(d.data.payload.path);
    });

  node
    .append("circle")
    .attr("r", 7)
    .attr("fill", (d) => d.data.payload.color)
    .attr("stroke", (d) =>
      d.data.payload.path === selectedPath ? "#1b9e77" : "#555")
    .attr("stroke-width", (d) =>
      d.data.payload.path === selectedPath ? 3 : 1);

  node
    .append("text")
    .attr("dy", "0.32em")
    .attr("x", (d) => (d.children ? -10 : 10))
    .attr("text-anchor", (d) => (d.children ? "end" : "start"))
    .attr("font-size", "11px")
    .text((d) => {
      const last = d.data.payload.path.split("/").pop() ?? "";
      const mark = collapsed.has(d.data.payload.path) ? " [+]" : "";
      return last + mark;
    });

  node.append("title").text((d) => {
    const p = d.data.payload;
    const stat = p.cv !== undefined
      ? `cv=${p.cv.toFixed(3)}`
      : p.kl !== undefined && p.kl !== null
        ? `kl=${p.kl.toFixed(3)}`
        : p.kl_status ?? "";
    return `${p.path}\nsupport ${p.support}  ${stat}`;
  });
}
