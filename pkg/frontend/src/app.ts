/**
 * Dashboard controller: owns the UI state, keeps it in the URL, fetches
 * exactly the payloads the current state needs, and hands them to the
 * views. All statistics and colors arrive computed from the server; this
 * layer only routes them.
 *
 * Layout contract (see index.html / buildSkeleton): controls across the
 * top (root selector, search, time range, attribute), tree center-left,
 * end-to-end histogram upper-right, and a bottom-right slot swapped
 * between the forward bar chart and the backward dual histograms.
 */

import { ApiClient } from "./api";
import type { Scope } from "./api";
import {
  clearBrush,
  enterBackward,
  initialState,
  parseState,
  selectCluster,
  selectPath,
  serializeState,
  toggleCollapsed,
  UiState,
} from "./state";
import { renderHistogram } from "./histogram";
import { renderBackwardPanel, renderForwardPanel } from "./panels";
import { renderTree } from "./tree";
import type {
  BackwardNodePayload,
  ClustersPayload,
  HistogramPayload,
  TreePayload,
} from "./types";

export interface AppOptions {
  query?: string;
  onUrlChange?: (query: string) => void;
}

function isAbort(error: unknown): boolean {
  return error instanceof DOMException && error.name === "AbortError";
}

export class App {
  state: UiState;
  private host: HTMLElement;
  private api: ApiClient;
  private onUrlChange: (query: string) => void;
  private refreshSeq = 0;

  constructor(host: HTMLElement, api: ApiClient, options: AppOptions = {}) {
    this.host = host;
    this.api = api;
    this.onUrlChange = options.onUrlChange ?? (() => {});
    this.state = options.query ? parseState(options.query) : initialState();
    this.buildSkeleton();
  }

  private el<T extends HTMLElement>(id: string): T {
    return this.host.querySelector(`#${id}`) as T;
  }

  private buildSkeleton(): void {
    this.host.innerHTML = `
      <div class="controls">
        <input id="root-search" type="search" placeholder="search roots" />
        <select id="root-select"></select>
        <input id="time-from" type="number" placeholder="from (µs)" />
        <input id="time-to" type="number" placeholder="to (µs)" />
        <select id="attr-select">
          <option value="execution-time">execution time</option>
          <option value="frequency">frequency</option>
        </select>
        <button id="clear-brush" type="button" hidden>clear brush</button>
        <span id="status-line"></span>
      </div>
      <div class="layout">
        <div id="tree-panel" class="panel"></div>
        <div class="right-column">
          <div id="histogram-panel" class="panel"></div>
          <div id="detail-panel" class="panel"></div>
        </div>
      </div>`;

    this.el<HTMLInputElement>("root-search").addEventListener("input", (e) => {
      void this.loadRoots((e.target as HTMLInputElement).value);
    });
    this.el<HTMLSelectElement>("root-select").addEventListener("change", (e) => {
      this.update({
        ...selectPath(this.state, null),
        root: (e.target as HTMLSelectElement).value || null,
        mode: "forward",
        brush: null,
      });
    });
    this.el<HTMLSelectElement>("attr-select").addEventListener("change", (e) => {
      const attr = (e.target as HTMLSelectElement).value as UiState["attr"];
      this.update({ ...this.state, attr, cluster: null });
    });
    const timeHandler = () => {
      const from = this.el<HTMLInputElement>("time-from").value;
      const to = this.el<HTMLInputElement>("time-to").value;
      this.update({
        ...this.state,
        from: from === "" ? null : Number(from),
        to: to === "" ? null : Number(to),
      });
    };
    this.el<HTMLInputElement>("time-from").addEventListener("change", timeHandler);
    this.el<HTMLInputElement>("time-to").addEventListener("change", timeHandler);
    this.el<HTMLButtonElement>("clear-brush").addEventListener("click", () => {
      this.update(clearBrush(this.state));
    });
  }

  async init(): Promise<void> {
    await this.loadRoots();
    await this.refresh();
  }

  /** Apply a state transition: sync controls + URL, refetch, re-render. */
  update(next: UiState): Promise<void> {
    this.state = next;
    this.onUrlChange(serializeState(next));
    return this.refresh();
  }

  /** Histogram brush gesture: a range enters backward mode with those
   * exact µs bounds; clearing returns to forward mode. */
  applyBrush(range: [number, number] | null): Promise<void> {
    return this.update(range
      ? enterBackward(this.state, range[0], range[1])
      : clearBrush(this.state));
  }

  /** Tree node click: select the execution path for detail analysis. */
  clickNode(path: string): Promise<void> {
    return this.update(selectPath(this.state, path));
  }

  /** Tree node double-click: collapse/expand the subtree (client-only). */
  dblClickNode(path: string): Promise<void> {
    return this.update(toggleCollapsed(this.state, path));
  }

  /** Forward bar click: select that cluster and highlight its footprint. */
  clickBar(index: number): Promise<void> {
    return this.update(selectCluster(this.state, index));
  }

  private async loadRoots(q?: string): Promise<void> {
    const payload = await this.api.roots(q, this.state.from, this.state.to);
    const select = this.el<HTMLSelectElement>("root-select");
    select.replaceChildren(new Option("select a root RPC", ""));
    for (const entry of payload.roots) {
      select.appendChild(
        new Option(`${entry.root} (${entry.count})`, entry.root));
    }
    if (this.state.root) select.value = this.state.root;
  }

  private scope(): Scope {
    return {
      root: this.state.root!,
      from: this.state.from,
      to: this.state.to,
      attr: this.state.attr,
    };
  }

  private async refresh(): Promise<void> {
    const seq = ++this.refreshSeq;
    const s = this.state;
    this.el<HTMLSelectElement>("attr-select").value = s.attr;
    this.el<HTMLButtonElement>("clear-brush").hidden = s.mode !== "backward";
    if (!s.root) {
      this.renderAll(null, null, null, null);
      this.setStatus("select a root RPC to begin");
      return;
    }

    try {
      const treePromise: Promise<TreePayload> = s.mode === "backward"
        ? this.api.backwardTree(this.scope(), s.brush![0], s.brush![1])
        : this.api.tree(this.scope());
      const histPromise = this.api.histogram(this.scope());
      let clustersPromise: Promise<ClustersPayload> | null = null;
      let backwardNodePromise: Promise<BackwardNodePayload> | null = null;
      if (s.path && s.mode === "forward") {
        clustersPromise = this.api.nodeClusters(this.scope(), s.path);
      }
      if (s.path && s.mode === "backward") {
        backwardNodePromise = this.api.backwardNode(
          this.scope(), s.path, s.brush![0], s.brush![1]);
      }

      const [tree, hist, clusters, backwardNode] = await Promise.all([
        treePromise,
        histPromise,
        clustersPromise,
        backwardNodePromise,
      ]);
      if (seq !== this.refreshSeq) return; // superseded by newer input
      this.renderAll(tree, hist, clusters, backwardNode);
    } catch (error) {
      if (isAbort(error)) return;
      if (seq !== this.refreshSeq) return;
      this.setStatus(`error: ${(error as Error).message}`);
    }
  }

  private renderAll(
    tree: TreePayload | null,
    hist: HistogramPayload | null,
    clusters: ClustersPayload | null,
    backwardNode: BackwardNodePayload | null,
  ): void {
    const s = this.state;
    renderTree(
      this.el("tree-panel"),
      tree?.status === "ok" ? tree.nodes : undefined,
      s.collapsed,
      s.path,
      {
        onNodeClick: (path) => void this.clickNode(path),
        onNodeDblClick: (path) => void this.dblClickNode(path),
      },
    );

    let mask: number[] | null = null;
    if (s.mode === "forward" && clusters?.status === "ok" && s.cluster !== null) {
      mask = clusters.clusters[s.cluster]?.highlight ?? null;
    }
    renderHistogram(
      this.el("histogram-panel"),
      hist?.status === "ok" ? hist : null,
      mask,
      s.brush,
      { onBrush: (range) => void this.applyBrush(range) },
    );

    const detail = this.el("detail-panel");
    if (s.mode === "backward") {
      renderBackwardPanel(detail, backwardNode);
    } else {
      renderForwardPanel(detail, clusters, s.cluster, {
        onBarClick: (index) => void this.clickBar(index),
      });
    }

    if (tree?.status === "ok") {
      const parts = [`${tree.request_count} requests`];
      if (s.mode === "backward" && tree.n_selected !== undefined) {
        parts.push(`${tree.n_selected} brushed`);
      }
      this.setStatus(parts.join(", "));
    } else if (tree) {
      this.setStatus(tree.status);
    }
  }

  private setStatus(text: string): void {
    this.el("status-line").textContent = text;
  }
}
