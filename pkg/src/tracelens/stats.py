"""Statistical kernels for the analytics views.

Conventions fixed here and relied on by the API schema and tests:
  - CV uses the population standard deviation over the analyzed set.
  - The p99 outlier filter drops values strictly greater than the
    empirical 99th percentile; callers apply it to execution-time data
    only, and the same filtered set feeds CV and clustering.
  - 1-D clustering is the exact SSE-optimal contiguous partition
    (dynamic program over sorted values), deterministic, selected over
    k ∈ 2..5 by highest mean silhouette; below 2 distinct values a
    single k=1 cluster is returned.
  - KL divergence is D(selected ‖ other), natural log, over shared
    equal-width bins spanning the union range, with additive smoothing
    p_i = (c_i + α)/(n + αB); α = 0.5, B = 20, and a 5-sample minimum
    per side by default.
  - Color ramps are linear white→red, clamped at statistic value 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

DEFAULT_HIST_BINS = 50
KL_BINS = 20
KL_ALPHA = 0.5
KL_MIN_SAMPLES = 5
INSUFFICIENT_COLOR = (200, 200, 200)


# -- coefficient of variation -------------------------------------------------

@dataclass(frozen=True)
class CvStat:
    cv: float
    n_used: int
    n_filtered: int


def p99_filter(values: np.ndarray) -> np.ndarray:
    """Drop values strictly greater than the empirical 99th percentile."""
    return values[values <= np.percentile(values, 99)]


def coefficient_of_variation(values: Sequence[float], apply_p99: bool = False) -> CvStat:
    """σ/μ of the (optionally p99-filtered) values; 0 when the mean is 0 or
    fewer than two values remain."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("coefficient_of_variation: empty input")
    if np.any(arr < 0):
        raise ValueError("coefficient_of_variation: negative values")
    used = p99_filter(arr) if apply_p99 else arr
    n_used = int(used.size)
    mean = float(used.mean())
    if mean == 0.0 or n_used < 2:
        cv = 0.0
    else:
        cv = float(used.std() / mean)
    return CvStat(cv=cv, n_used=n_used, n_filtered=int(arr.size - n_used))


# -- white→red color ramp -----------------------------------------------------

def _ramp(stat: float) -> tuple[int, int, int]:
    c = min(max(stat, 0.0), 1.0)
    side = int(255.0 * (1.0 - c) + 0.5)
    return (255, side, side)


def cv_color(cv: float) -> tuple[int, int, int]:
    """White at cv 0, red at cv ≥ 1, linear in between."""
    if cv < 0:
        raise ValueError("cv must be ≥ 0")
    return _ramp(cv)


def kl_color(kl: Optional[float], status: str = "ok") -> tuple[int, int, int]:
    """Same ramp with divergence semantics; neutral grey when a node had
    too few samples."""
    if status != "ok" or kl is None:
        return INSUFFICIENT_COLOR
    return _ramp(kl)


def color_hex(rgb: tuple[int, int, int]) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


# -- optimal 1-D clustering ----------------------------------------------------

@dataclass(frozen=True)
class Cluster:
    lo: float
    hi: float
    members: tuple[int, ...]   # indices into the input value list

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class ClusterResult:
    k: int
    clusters: tuple[Cluster, ...]   # ascending, non-overlapping ranges
    silhouette: Optional[float]     # None for the degenerate k=1 case

    def shares(self, n: Optional[int] = None) -> list[float]:
        total = n if n is not None else sum(c.size for c in self.clusters)
        return [c.size / total for c in self.clusters]

    def assignment(self, values: Sequence[float]) -> np.ndarray:
        labels = np.empty(len(values), dtype=np.int64)
        for i, c in enumerate(self.clusters):
            labels[list(c.members)] = i
        return labels


def _interval_sse(w_cum, wx_cum, wx2_cum, i, j):
    """Weighted SSE of unique-value interval [i, j] from prefix sums."""
    w = w_cum[j + 1] - w_cum[i]
    wx = wx_cum[j + 1] - wx_cum[i]
    wx2 = wx2_cum[j + 1] - wx2_cum[i]
    return wx2 - wx * wx / w


class _PartitionTable:
    """SSE-optimal contiguous partitions of weighted sorted unique values.

    Dynamic program with divide-and-conquer over the monotone argmin
    (ckmeans-style), O(k·m·log m) for m unique values; layers are shared
    so boundaries for every k ≤ kmax come from one table.
    """

    def __init__(self, x: np.ndarray, w: np.ndarray, kmax: int):
        self.m = m = len(x)
        self._w_cum = np.concatenate(([0.0], np.cumsum(w)))
        self._wx_cum = np.concatenate(([0.0], np.cumsum(w * x)))
        self._wx2_cum = np.concatenate(([0.0], np.cumsum(w * x * x)))

        self._cost = [[math.inf] * m for _ in range(kmax)]
        self._split = [[0] * m for _ in range(kmax)]
        for i in range(m):
            self._cost[0][i] = self._sse(0, i)
        for layer in range(1, kmax):
            self._fill(layer, layer, m - 1, layer, m - 1)

    def _sse(self, i, j):
        return _interval_sse(self._w_cum, self._wx_cum, self._wx2_cum, i, j)

    def _fill(self, layer, lo, hi, opt_lo, opt_hi):
        if lo > hi:
            return
        mid = (lo + hi) // 2
        prev = self._cost[layer - 1]
        best_cost, best_j = math.inf, opt_lo
        for j in range(opt_lo, min(mid, opt_hi) + 1):
            c = prev[j - 1] + self._sse(j, mid)
            if c < best_cost:
                best_cost, best_j = c, j
        self._cost[layer][mid] = best_cost
        self._split[layer][mid] = best_j
        self._fill(layer, lo, mid - 1, opt_lo, best_j)
        self._fill(layer, mid + 1, hi, best_j, opt_hi)

    def boundaries(self, k: int) -> list[int]:
        """Start index of each of the k groups, ascending."""
        starts = []
        end = self.m - 1
        for layer in range(k - 1, 0, -1):
            start = self._split[layer][end]
            starts.append(start)
            end = start - 1
        starts.append(0)
        return starts[::-1]


def silhouette(values: Sequence[float], labels: Sequence[int]) -> float:
    """Mean silhouette over 1-D points with absolute-difference distance.

    a = mean intra-cluster distance excluding self; b = smallest mean
    distance to another cluster; s = (b−a)/max(a,b). Singletons and
    points with a = b = 0 contribute 0. Requires ≥ 2 non-empty clusters.
    """
    vals = np.asarray(values, dtype=np.float64)
    labs = np.asarray(labels)
    uniq = np.unique(labs)
    if len(uniq) < 2:
        raise ValueError("silhouette requires at least 2 clusters")

    sorted_by_cluster = {}
    for c in uniq:
        member_vals = np.sort(vals[labs == c])
        prefix = np.concatenate(([0.0], np.cumsum(member_vals)))
        sorted_by_cluster[c] = (member_vals, prefix)

    def dist_sum(x: float, c) -> float:
        member_vals, prefix = sorted_by_cluster[c]
        idx = np.searchsorted(member_vals, x)
        left = x * idx - prefix[idx]
        right = (prefix[-1] - prefix[idx]) - x * (len(member_vals) - idx)
        return float(left + right)

    total = 0.0
    for x, own in zip(vals, labs):
        n_own = len(sorted_by_cluster[own][0])
        if n_own == 1:
            continue  # singleton: s = 0
        a = dist_sum(x, own) / (n_own - 1)
        b = min(dist_sum(x, other) / len(sorted_by_cluster[other][0])
                for other in uniq if other != own)
        if a == 0.0 and b == 0.0:
            continue  # degenerate: s = 0
        total += (b - a) / max(a, b)
    return total / len(vals)


def cluster_1d(values: Sequence[float]) -> ClusterResult:
    """Group 1-D values into their recurring ranges.

    Tries every feasible k in 2..5 (k ≤ number of distinct values), each
    as the exact SSE-optimal contiguous partition, and keeps the highest
    mean silhouette (smaller k on ties). Fewer than 2 distinct values
    short-circuit to a single cluster.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cluster_1d: empty input")
    order = np.argsort(arr, kind="stable")
    uniq, counts = np.unique(arr, return_counts=True)
    m = len(uniq)
    if m < 2:
        members = tuple(range(arr.size))
        cluster = Cluster(lo=float(arr.min()), hi=float(arr.max()), members=members)
        return ClusterResult(k=1, clusters=(cluster,), silhouette=None)

    # Cluster membership is contiguous in sorted order; recover original
    # indices from the sort permutation.
    sorted_counts_cum = np.concatenate(([0], np.cumsum(counts)))
    table = _PartitionTable(uniq, counts.astype(np.float64), min(5, m))

    best: Optional[tuple[float, int, list[int]]] = None
    for k in range(2, min(5, m) + 1):
        starts = table.boundaries(k)
        labels = np.zeros(arr.size, dtype=np.int64)
        for ci, start_u in enumerate(starts):
            end_u = starts[ci + 1] if ci + 1 < len(starts) else m
            lo_pos = sorted_counts_cum[start_u]
            hi_pos = sorted_counts_cum[end_u]
            labels[order[lo_pos:hi_pos]] = ci
        s = silhouette(arr, labels)
        if best is None or s > best[0] + 1e-12:
            best = (s, k, starts)

    s, k, starts = best
    clusters = []
    for ci, start_u in enumerate(starts):
        end_u = starts[ci + 1] if ci + 1 < len(starts) else m
        lo_pos = sorted_counts_cum[start_u]
        hi_pos = sorted_counts_cum[end_u]
        members = tuple(sorted(int(i) for i in order[lo_pos:hi_pos]))
        clusters.append(Cluster(
            lo=float(uniq[start_u]), hi=float(uniq[end_u - 1]), members=members))
    return ClusterResult(k=k, clusters=tuple(clusters), silhouette=float(s))


# -- histograms and selection -------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]    # B+1 ascending bin edges
    counts: tuple[int, ...]     # B bins, right-open except the last

    @property
    def total(self) -> int:
        return sum(self.counts)


def make_histogram(values: Sequence[float], bins: int = DEFAULT_HIST_BINS) -> Histogram:
    """Equal-width histogram over [min, max]; a single distinct value gets
    a synthetic unit-width range so the edges stay strictly ascending."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("make_histogram: empty input")
    if bins < 1:
        raise ValueError("make_histogram: need at least one bin")
    lo, hi = float(arr.min()), float(arr.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(arr, bins=edges)
    return Histogram(edges=tuple(edges.tolist()), counts=tuple(int(c) for c in counts))


def highlight_mask(hist: Histogram, selected_values: Sequence[float]) -> tuple[int, ...]:
    """Per-bin counts of the selected subset under the histogram's own
    binning; raises on any value outside the histogram range."""
    arr = np.asarray(selected_values, dtype=np.float64)
    edges = np.asarray(hist.edges)
    if arr.size and (arr.min() < edges[0] or arr.max() > edges[-1]):
        raise ValueError("highlight_mask: value outside histogram range (binning mismatch)")
    counts, _ = np.histogram(arr, bins=edges)
    return tuple(int(c) for c in counts)


def partition_by_range(e2e_records, lo: int, hi: int) -> tuple[list[str], list[str]]:
    """Split trace ids by response_time inside/outside the closed range."""
    if lo > hi:
        raise ValueError("partition_by_range: lo must be ≤ hi")
    selected, other = [], []
    for rec in e2e_records:
        (selected if lo <= rec.response_time <= hi else other).append(rec.trace_id)
    return selected, other


# -- KL divergence ---------------------------------------------------------------

@dataclass(frozen=True)
class DivergenceStat:
    kl: Optional[float]
    n_selected: int
    n_other: int
    status: str   # "ok" | "insufficient-data"


def kl_divergence(
    selected: Sequence[float],
    other: Sequence[float],
    bins: int = KL_BINS,
    alpha: float = KL_ALPHA,
    min_samples: int = KL_MIN_SAMPLES,
) -> DivergenceStat:
    """D(selected ‖ other) over shared equal-width bins with additive
    smoothing. Sides with fewer than min_samples values yield status
    insufficient-data; an all-identical union range yields kl 0."""
    if bins < 2:
        raise ValueError("kl_divergence: need at least 2 bins")
    if alpha <= 0:
        raise ValueError("kl_divergence: smoothing alpha must be > 0")
    p_vals = np.asarray(selected, dtype=np.float64)
    q_vals = np.asarray(other, dtype=np.float64)
    n_p, n_q = int(p_vals.size), int(q_vals.size)
    if n_p < min_samples or n_q < min_samples:
        return DivergenceStat(kl=None, n_selected=n_p, n_other=n_q,
                              status="insufficient-data")
    lo = float(min(p_vals.min(), q_vals.min()))
    hi = float(max(p_vals.max(), q_vals.max()))
    if lo == hi:
        return DivergenceStat(kl=0.0, n_selected=n_p, n_other=n_q, status="ok")
    edges = np.linspace(lo, hi, bins + 1)
    c_p, _ = np.histogram(p_vals, bins=edges)
    c_q, _ = np.histogram(q_vals, bins=edges)
    p = (c_p + alpha) / (n_p + alpha * bins)
    q = (c_q + alpha) / (n_q + alpha * bins)
    kl = float(np.sum(p * np.log(p / q)))
    return DivergenceStat(kl=max(kl, 0.0), n_selected=n_p, n_other=n_q, status="ok")
