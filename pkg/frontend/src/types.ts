/**
 * Payload shapes of the backend HTTP API (see the repository README for
 * the authoritative schema). All times are µs epoch integers; shares are
 * decimal fractions; every color arrives precomputed from the server and
 * is rendered verbatim.
 */

export type Attribute = "execution-time" | "frequency";

export interface RootEntry {
  root: string;
  count: number;
}

export interface RootsPayload {
  status: string;
  roots: RootEntry[];
}

export interface TreeNodePayload {
  path: string;
  parent: string | null;
  kind: string;
  support: number;
  color: string;
  cv?: number;
  n_used?: number;
  n_filtered?: number;
  kl?: number | null;
  kl_status?: string;
  n_selected?: number;
  n_other?: number;
  selection_basis?: boolean;
}

export interface TreePayload {
  status: string;
  root?: string;
  attr?: Attribute;
  request_count?: number;
  nodes?: TreeNodePayload[];
  lo?: number;
  hi?: number;
  n_selected?: number;
  n_other?: number;
}

export interface HistogramPayload {
  status: string;
  edges: number[];
  counts: number[];
  total: number;
}

export interface ClusterPayload {
  lo: number;
  hi: number;
  size: number;
  share: number;
  member_trace_ids: string[];
  highlight: number[];
}

export interface ClustersPayload {
  status: string;
  path: string;
  attr: Attribute;
  support: number;
  n_clustered: number;
  n_filtered: number;
  k: number;
  silhouette: number | null;
  clusters: ClusterPayload[];
  histogram: { edges: number[]; counts: number[] };
}

export interface BackwardNodePayload {
  status: string;
  path: string;
  attr?: Attribute;
  lo: number;
  hi: number;
  edges?: number[];
  selected_counts?: number[];
  other_counts?: number[];
  n_selected?: number;
  n_other?: number;
  kl?: number | null;
  kl_status?: string;
}
