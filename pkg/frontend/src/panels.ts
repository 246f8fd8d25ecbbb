/**
 * The bottom-right detail slot: a forward bar chart of a node's attribute
 * behaviors, or the backward pair of distributions for a brushed range.
 *
 * Labels and percentages come straight off the API payload; the selected
 * bar's highlight mask is what the histogram overlays in red.
 */

import * as d3 from "d3";

import type { Attribute, BackwardNodePayload, ClustersPayload } from "./types";

const SELECTED_COLOR = "#d62728";
const OTHER_COLOR = "#bdbdbd";

export interface ForwardCallbacks {
  onBarClick: (clusterIndex: number) => void;
}

function rangeLabel(lo: number, hi: number, attr: Attribute): string {
  if (attr === "frequency") {
    return lo === hi ? `${lo} invocations` : `${lo} to ${hi} invocations`;
  }
  return `${(lo / 1000).toFixed(2)} to ${(hi / 1000).toFixed(2)} ms`;
}

export function renderForwardPanel(
  container: HTMLElement,
  payload: ClustersPayload | null,
  selectedCluster: number | null,
  callbacks: ForwardCallbacks,
): void {
  container.replaceChildren();
  if (!payload || payload.status !== "ok") {
    const placeholder = document.createElement("div");
    placeholder.className = "placeholder";
    placeholder.textContent = "click a tree node to inspect its behaviors";
    container.appendChild(placeholder);
    return;
  }

  const header = document.createElement("div");
  header.className = "panel-header";
  const sil = payload.silhouette === null
    ? "single behavior"
    : `silhouette ${payload.silhouette.toFixed(3)}`;
  header.textContent = `${payload.path} — ${payload.attr}, k=${payload.k} (${sil})`;
  container.appendChild(header);

  const list = document.createElement("div");
  list.className = "bar-list";
  container.appendChild(list);

  payload.clusters.forEach((cluster, index) => {
    const row = document.createElement("button");
    row.type = "button";
    row.className = "cluster-bar";
    row.dataset.cluster = String(index);
    if (index === selectedCluster) row.classList.add("selected");
    if (payload.k === 1) row.disabled = true;

    const fill = document.createElement("span");
    fill.className = "bar-fill";
    fill.style.width = `${Math.max(2, Math.round(100 * cluster.share))}%`;
    fill.style.background = index === selectedCluster ? SELECTED_COLOR : OTHER_COLOR;
    row.appendChild(fill);

    const label = document.createElement("span");
    label.className = "bar-label";
    label.textContent =
      `${rangeLabel(cluster.lo, cluster.hi, payload.attr)} — ` +
      `${(cluster.share * 100).toFixed(2)}% of requests`;
    row.appendChild(label);

    if (payload.k > 1) {
      row.addEventListener("click", () => callbacks.onBarClick(index));
    }
    list.appendChild(row);
  });
}

export function renderBackwardPanel(
  container: HTMLElement,
  payload: BackwardNodePayload | null,
): void {
  container.replaceChildren();
  if (!payload) {
    const placeholder = document.createElement("div");
    placeholder.className = "placeholder";
    placeholder.textContent = "click a tree node to compare its distributions";
    container.appendChild(placeholder);
    return;
  }
  if (payload.status !== "ok") {
    const placeholder = document.createElement("div");
    placeholder.className = "placeholder";
    placeholder.textContent = payload.status;
    container.appendChild(placeholder);
    return;
  }

  const header = document.createElement("div");
  header.className = "panel-header";
  const kl = payload.kl !== null && payload.kl !== undefined
    ? `kl=${payload.kl.toFixed(3)}`
    : payload.kl_status;
  header.textContent =
    `${payload.path} — brushed (red, n=${payload.n_selected}) vs ` +
    `others (grey, n=${payload.n_other}), ${kl}`;
  container.appendChild(header);

  const edges = payload.edges!;
  const selected = payload.selected_counts!;
  const other = payload.other_counts!;
  const width = container.clientWidth || 560;
  const height = Math.max(140, (container.clientHeight || 200) - 24);
  const margin = { top: 8, right: 12, bottom: 24, left: 40 };

  const x = d3.scaleLinear()
    .domain([edges[0], edges[edges.length - 1]])
    .range([margin.left, width - margin.right]);
  const y = d3.scaleLinear()
    .domain([0, Math.max(1, d3.max([...selected, ...other]) ?? 1)])
    .range([height - margin.bottom, margin.top]);

  const svg = d3.select(container)
    .append("svg")
    .attr("class", "backward-svg")
    .attr("width", width)
    .attr("height", height);

  const bars = (values: number[], color: string, cls: string, inset: number) =>
    svg.append("g")
      .selectAll("rect")
      .data(values)
      .join("rect")
      .attr("class", cls)
      .attr("x", (_d, i) => x(edges[i]) + inset)
      .attr("width", (_d, i) =>
        Math.max(0, x(edges[i + 1]) - x(edges[i]) - 2 * inset))
      .attr("y", (d) => y(d))
      .attr("height", (d) => y(0) - y(d))
      .attr("fill", color)
      .attr("fill-opacity", cls === "backward-selected" ? 0.85 : 0.6);

  bars(other, OTHER_COLOR, "backward-other", 0.5);
  bars(selected, SELECTED_COLOR, "backward-selected", 2);

  svg.append("g")
    .attr("transform", `translate(0,${height - margin.bottom})`)
    .call(d3.axisBottom(x).ticks(6).tickFormat((v) => `${Number(v) / 1000}ms`));
  svg.append("g")
    .attr("transform", `translate(${margin.left},0)`)
    .call(d3.axisLeft(y).ticks(4));
}
