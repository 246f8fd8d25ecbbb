// @vitest-environment jsdom
//
// Request-capture checks for the dashboard contract: server colors are
// rendered unmodified, brushing issues a backward request with exactly
// the brushed bounds, a forward bar click requests that cluster's
// highlight, and deep-link URLs reproduce the same view.

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { App } from "../src/app";
import { brushSelectionToRange } from "../src/histogram";
import { captureFetch, HOT, ROOT } from "./fixtures";
import * as d3 from "d3";

function makeApp(query?: string) {
  const { fetchFn, requests } = captureFetch();
  const host = document.createElement("div");
  document.body.appendChild(host);
  const urls: string[] = [];
  const app = new App(host, new ApiClient("", fetchFn), {
    query,
    onUrlChange: (q) => urls.push(q),
  });
  return { app, host, requests, urls };
}

function nodeColors(host: HTMLElement): Map<string, string> {
  const fills = new Map<string, string>();
  host.querySelectorAll("#tree-panel g.tree-node").forEach((g) => {
    fills.set(g.getAttribute("data-path")!,
      g.querySelector("circle")!.getAttribute("fill")!);
  });
  return fills;
}

describe("dashboard contract", () => {
  it("renders server-provided node colors unmodified", async () => {
    const { app, host } = makeApp();
    await app.init();
    await app.update({ ...app.state, root: ROOT });

    const fills = nodeColors(host);
    expect(fills.get(ROOT)).toBe("#fff2f2");
    expect(fills.get("gateway:request/svc-a:op-a")).toBe("#ffcccc");
    expect(fills.get(HOT)).toBe("#ff0000");
  });

  it("brushing emits a backward request with exactly the brushed bounds",
     async () => {
    const { app, requests } = makeApp();
    await app.init();
    await app.update({ ...app.state, root: ROOT });
    requests.length = 0;

    await app.applyBrush([47213, 60117]);

    const backward = requests.filter((r) => r.pathname === "/api/backward/tree");
    expect(backward).toHaveLength(1);
    expect(backward[0].params.get("lo")).toBe("47213");
    expect(backward[0].params.get("hi")).toBe("60117");
    expect(backward[0].params.get("root")).toBe(ROOT);
    expect(app.state.mode).toBe("backward");
  });

  it("converts brush pixel selections to exact µs bounds", () => {
    const scale = d3.scaleLinear().domain([1000, 5000]).range([0, 400]);
    expect(brushSelectionToRange(scale, [0, 400])).toEqual([1000, 5000]);
    expect(brushSelectionToRange(scale, [100, 250])).toEqual([2000, 3500]);
  });

  it("clicking a forward bar requests that cluster's highlight", async () => {
    const { app, host, requests } = makeApp();
    await app.init();
    await app.update({ ...app.state, root: ROOT });
    await app.clickNode(HOT);

    // node click already requested the clusters for that path
    const nodeClickReqs = requests.filter((r) => r.pathname === "/api/node/clusters");
    expect(nodeClickReqs).toHaveLength(1);
    expect(nodeClickReqs[0].params.get("path")).toBe(HOT);
    requests.length = 0;

    const bar = host.querySelector<HTMLButtonElement>(
      '#detail-panel .cluster-bar[data-cluster="1"]')!;
    bar.dispatchEvent(new MouseEvent("click", { bubbles: true }));
    await new Promise((resolve) => setTimeout(resolve, 0));

    const clusterReqs = requests.filter((r) => r.pathname === "/api/node/clusters");
    expect(clusterReqs).toHaveLength(1);
    expect(clusterReqs[0].params.get("path")).toBe(HOT);
    expect(app.state.cluster).toBe(1);

    // the selected cluster's highlight mask is what the histogram overlays
    const maskRects = host.querySelectorAll("#histogram-panel rect.hist-mask");
    const heights = Array.from(maskRects).map(
      (r) => Number(r.getAttribute("height")));
    const expectedMask = [0, 0, 5, 10]; // fixture clusters[1].highlight
    expect(maskRects).toHaveLength(4);
    heights.forEach((h, i) => {
      expect(h > 0).toBe(expectedMask[i] > 0);
    });
  });

  it("backward node click shows the dual histograms from the API", async () => {
    const { app, host } = makeApp();
    await app.init();
    await app.update({ ...app.state, root: ROOT });
    await app.applyBrush([2000, 5000]);
    await app.clickNode(HOT);

    const selected = host.querySelectorAll("#detail-panel rect.backward-selected");
    const other = host.querySelectorAll("#detail-panel rect.backward-other");
    expect(selected).toHaveLength(4);
    expect(other).toHaveLength(4);
    expect(host.querySelector("#detail-panel .panel-header")!.textContent)
      .toContain("kl=3.200");
  });

  it("reloading a deep-link URL reproduces the same view", async () => {
    const first = makeApp();
    await first.app.init();
    await first.app.update({ ...first.app.state, root: ROOT });
    await first.app.applyBrush([2000, 5000]);
    await first.app.clickNode(HOT);
    const link = first.urls[first.urls.length - 1];

    const second = makeApp(link);
    await second.app.init();

    expect(second.app.state.root).toBe(ROOT);
    expect(second.app.state.mode).toBe("backward");
    expect(second.app.state.path).toBe(HOT);
    expect(second.app.state.brush).toEqual([2000, 5000]);

    // identical backend queries for the restored view
    const queryOf = (requests: typeof first.requests, path: string) =>
      requests.filter((r) => r.pathname === path).pop()?.url;
    for (const endpoint of ["/api/backward/tree", "/api/backward/node",
                            "/api/histogram"]) {
      expect(queryOf(second.requests, endpoint))
        .toBe(queryOf(first.requests, endpoint));
    }
    // and an identical rendered tree
    expect(nodeColors(second.host)).toEqual(nodeColors(first.host));
  });

  it("clearing the brush returns to the forward view", async () => {
    const { app, requests } = makeApp();
    await app.init();
    await app.update({ ...app.state, root: ROOT });
    await app.applyBrush([2000, 5000]);
    requests.length = 0;
    await app.applyBrush(null);
    expect(app.state.mode).toBe("forward");
    expect(requests.some((r) => r.pathname === "/api/tree")).toBe(true);
    expect(requests.some((r) => r.pathname === "/api/backward/tree")).toBe(false);
  });

  it("double-click collapse is client-only and stays out of the URL",
     async () => {
    const { app, host, urls } = makeApp();
    await app.init();
    await app.update({ ...app.state, root: ROOT });
    await app.dblClickNode(ROOT);
    expect(nodeColors(host).size).toBe(1); // children hidden
    expect(urls[urls.length - 1]).not.toContain("collapsed");
    await app.dblClickNode(ROOT);
    expect(nodeColors(host).size).toBe(3); // involution restores layout
  });
});
