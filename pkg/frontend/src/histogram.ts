/**
 * End-to-end response-time histogram with brush selection.
 *
 * Grey base bars; an optional highlight mask (a forward cluster's
 * footprint) is drawn red on top, counts taken verbatim from the API.
 * Brushing emits the selected range in µs and is how the dashboard enters
 * backward mode; clearing the brush returns to forward mode.
 */

import * as d3 from "d3";

import type { HistogramPayload } from "./types";

const BASE_COLOR = "#c9c9c9";
const MASK_COLOR = "#d62728";
const BRUSH_COLOR = "#1f77b4";

export interface HistogramCallbacks {
  onBrush: (range: [number, number] | null) => void;
}

/** Pixel brush selection to µs bounds, rounded to integers. */
export function brushSelectionToRange(
  scale: d3.ScaleLinear<number, number>,
  selection: [number, number],
): [number, number] {
  const lo = Math.round(scale.invert(selection[0]));
  const hi = Math.round(scale.invert(selection[1]));
  return [lo, hi];
}

export function renderHistogram(
  container: HTMLElement,
  hist: HistogramPayload | null,
  mask: number[] | null,
  brush: [number, number] | null,
  callbacks: HistogramCallbacks,
): void {
  container.replaceChildren();
  if (!hist || hist.status !== "ok") {
    const placeholder = document.createElement("div");
    placeholder.className = "placeholder";
    placeholder.textContent = "no data";
    container.appendChild(placeholder);
    return;
  }

  const width = container.clientWidth || 560;
  const height = container.clientHeight || 200;
  const margin = { top: 8, right: 12, bottom: 26, left: 44 };
  const edges = hist.edges;
  const counts = hist.counts;

  const x = d3.scaleLinear()
    .domain([edges[0], edges[edges.length - 1]])
    .range([margin.left, width - margin.right]);
  const y = d3.scaleLinear()
    .domain([0, Math.max(1, d3.max(counts) ?? 1)])
    .range([height - margin.bottom, margin.top]);

  const svg = d3.select(container)
    .append("svg")
    .attr("class", "histogram-svg")
    .attr("width", width)
    .attr("height", height);

  const bar = (values: number[], color: string, cls: string) =>
    svg.append("g")
      .selectAll("rect")
      .data(values)
      .join("rect")
      .attr("class", cls)
      .attr("x", (_d, i) => x(edges[i]) + 0.5)
      .attr("width", (_d, i) => Math.max(0, x(edges[i + 1]) - x(edges[i]) - 1))
      .attr("y", (d) => y(d))
      .attr("height", (d) => y(0) - y(d))
      .attr("fill", color);

  bar(counts, BASE_COLOR, "hist-bar");
  if (mask) bar(mask, MASK_COLOR, "hist-mask");

  svg.append("g")
    .attr("transform", `translate(0,${height - margin.bottom})`)
    .call(d3.axisBottom(x).ticks(6).tickFormat((v) => `${Number(v) / 1000}ms`));
  svg.append("g")
    .attr("transform", `translate(${margin.left},0)`)
    .call(d3.axisLeft(y).ticks(4));

  const brushBehavior = d3.brushX()
    .extent([[margin.left, margin.top], [width - margin.right, height - margin.bottom]])
    .on("end", (event) => {
      if (!event.sourceEvent) return; // ignore programmatic moves
      if (!event.selection) {
        callbacks.onBrush(null);
        return;
      }
      callbacks.onBrush(
        brushSelectionToRange(x, event.selection as [number, number]));
    });

  const brushG = svg.append("g").attr("class", "brush").call(brushBehavior);
  brushG.selectAll(".selection")
    .attr("fill", BRUSH_COLOR)
    .attr("fill-opacity", 0.18)
    .attr("stroke", BRUSH_COLOR);
  if (brush) {
    brushG.call(brushBehavior.move, [x(brush[0]), x(brush[1])]);
  }
}
