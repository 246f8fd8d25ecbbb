"""Embedded record store with two logical collections (paths, e2e).

Layout under the store directory:
    manifest.json   format version, segment index, per-root counts,
                    processed-trace digest; replaced atomically on commit
    processed.txt   processed trace ids, one per line (idempotence set)
    seg/NNNNNN.paths.npz / NNNNNN.e2e.npz
                    immutable columnar segments, one pair per
                    (root, day, commit); strings dictionary-encoded

Writers serialize through a file lock; readers work off a manifest
snapshot, so they never observe a torn batch. Queries filter segments by
root and time-range overlap, then rows by timestamp in the closed
interval [t0, t1], ordered by (timestamp, trace_id, path).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np
from filelock import FileLock

from .errors import StoreError, StoreVersionError
from .model import RpcName
from .paths import E2ERecord, PathKey, PathRecord

FORMAT_VERSION = 1
_US_PER_DAY = 86_400_000_000

_KIND_CODES = {"root": 0, "sync": 1, "async": 2, "mixed": 3}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def _digest(ids: Iterable[str]) -> str:
    h = hashlib.sha256()
    for tid in sorted(ids):
        h.update(tid.encode())
        h.update(b"\n")
    return h.hexdigest()


@dataclass
class CommitReceipt:
    segments_written: int
    path_records: int
    e2e_records: int


class TraceStore:
    """Handle on one on-disk store. Open existing stores with open(),
    create new ones with create(); counts in the manifest always match the
    stored records."""

    def __init__(self, location: Path, manifest: dict):
        self.location = Path(location)
        self.manifest = manifest
        self._processed: Optional[set[str]] = None
        self._segment_cache: dict[str, dict] = {}

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def create(cls, location) -> "TraceStore":
        location = Path(location)
        location.mkdir(parents=True, exist_ok=True)
        (location / "seg").mkdir(exist_ok=True)
        manifest_path = location / "manifest.json"
        if manifest_path.exists():
            raise StoreError(f"store already exists at {location}")
        manifest = {
            "format_version": FORMAT_VERSION,
            "segments": [],
            "roots": {},
            "processed_count": 0,
            "processed_digest": _digest([]),
            "next_segment": 1,
        }
        store = cls(location, manifest)
        store._write_manifest()
        (location / "processed.txt").touch()
        return store

    @classmethod
    def open(cls, location) -> "TraceStore":
        location = Path(location)
        manifest_path = location / "manifest.json"
        if not manifest_path.exists():
            raise StoreError(f"no store at {location}")
        with open(manifest_path) as f:
            manifest = json.load(f)
        version = manifest.get("format_version")
        if version != FORMAT_VERSION:
            raise StoreVersionError(
                f"store format version {version!r} not supported (want {FORMAT_VERSION})")
        return cls(location, manifest)

    @classmethod
    def open_or_create(cls, location) -> "TraceStore":
        if (Path(location) / "manifest.json").exists():
            return cls.open(location)
        return cls.create(location)

    def _write_manifest(self):
        tmp = self.location / "manifest.json.tmp"
        with open(tmp, "w") as f:
            json.dump(self.manifest, f, indent=1)
        os.replace(tmp, self.location / "manifest.json")

    def _lock(self) -> FileLock:
        return FileLock(str(self.location / "write.lock"))

    # -- processed-trace set (idempotence) ----------------------------------

    @property
    def processed_ids(self) -> set[str]:
        if self._processed is None:
            path = self.location / "processed.txt"
            if path.exists():
                self._processed = set(path.read_text().split())
            else:
                self._processed = set()
        return self._processed

    def is_processed(self, trace_id: str) -> bool:
        return trace_id in self.processed_ids

    # -- writes --------------------------------------------------------------

    def append_records(
        self,
        path_records: Sequence[PathRecord],
        e2e_records: Sequence[E2ERecord],
    ) -> CommitReceipt:
        """Append records durably; visible to readers opened after return.

        Trace ids of the e2e records are recorded as processed. Appending
        nothing is a valid no-op commit.
        """
        with self._lock():
            segments = 0
            if path_records or e2e_records:
                groups: dict[tuple[str, int], dict] = {}
                for r in path_records:
                    key = (r.root_rpc.canonical, r.timestamp // _US_PER_DAY)
                    groups.setdefault(key, {"paths": [], "e2e": []})["paths"].append(r)
                for r in e2e_records:
                    key = (r.root_rpc.canonical, r.timestamp // _US_PER_DAY)
                    groups.setdefault(key, {"paths": [], "e2e": []})["e2e"].append(r)
                for (root, day), recs in sorted(groups.items()):
                    self._write_segment(root, day, recs["paths"], recs["e2e"])
                    segments += 1
            new_ids = {r.trace_id for r in e2e_records} - self.processed_ids
            if new_ids:
                with open(self.location / "processed.txt", "a") as f:
                    for tid in sorted(new_ids):
                        f.write(tid + "\n")
                self.processed_ids.update(new_ids)
            self.manifest["processed_count"] = len(self.processed_ids)
            self.manifest["processed_digest"] = _digest(self.processed_ids)
            self._write_manifest()
        return CommitReceipt(segments, len(path_records), len(e2e_records))

    def _write_segment(self, root: str, day: int, paths: list[PathRecord], e2e: list[E2ERecord]):
        seg_id = f"{self.manifest['next_segment']:06d}"
        self.manifest["next_segment"] += 1
        seg_dir = self.location / "seg"
        t_min, t_max = None, None

        def _update_range(ts_values):
            nonlocal t_min, t_max
            if len(ts_values):
                lo, hi = int(min(ts_values)), int(max(ts_values))
                t_min = lo if t_min is None else min(t_min, lo)
                t_max = hi if t_max is None else max(t_max, hi)

        if paths:
            path_table = sorted({r.path.canonical for r in paths})
            path_index = {p: i for i, p in enumerate(path_table)}
            trace_table = sorted({r.trace_id for r in paths})
            trace_index = {t: i for i, t in enumerate(trace_table)}
            ts = np.array([r.timestamp for r in paths], dtype=np.int64)
            _update_range(ts)
            self._atomic_savez(
                seg_dir / f"{seg_id}.paths.npz",
                path_table=np.array(path_table),
                trace_table=np.array(trace_table),
                path_idx=np.array([path_index[r.path.canonical] for r in paths], dtype=np.uint32),
                trace_idx=np.array([trace_index[r.trace_id] for r in paths], dtype=np.uint32),
                occurrences=np.array([r.occurrences for r in paths], dtype=np.uint32),
                exec_mean=np.array([r.exec_time_mean for r in paths], dtype=np.float64),
                timestamp=ts,
                kind=np.array([_KIND_CODES[r.kind] for r in paths], dtype=np.uint8),
            )
        if e2e:
            trace_table = sorted({r.trace_id for r in e2e})
            trace_index = {t: i for i, t in enumerate(trace_table)}
            ts = np.array([r.timestamp for r in e2e], dtype=np.int64)
            _update_range(ts)
            self._atomic_savez(
                seg_dir / f"{seg_id}.e2e.npz",
                trace_table=np.array(trace_table),
                trace_idx=np.array([trace_index[r.trace_id] for r in e2e], dtype=np.uint32),
                response_time=np.array([r.response_time for r in e2e], dtype=np.int64),
                timestamp=ts,
            )
        self.manifest["segments"].append({
            "id": seg_id,
            "root": root,
            "day": day,
            "t_min": t_min,
            "t_max": t_max,
            "n_paths": len(paths),
            "n_e2e": len(e2e),
        })
        counts = self.manifest["roots"].setdefault(root, {"path_records": 0, "e2e_records": 0})
        counts["path_records"] += len(paths)
        counts["e2e_records"] += len(e2e)

    @staticmethod
    def _atomic_savez(target: Path, **arrays):
        tmp = target.with_suffix(".tmp.npz")
        try:
            np.savez_compressed(tmp, **arrays)
            os.replace(tmp, target)
        except OSError as e:
            raise StoreError(f"cannot write segment {target.name}: {e}") from e

    # -- reads ---------------------------------------------------------------

    def _segments_for(self, root: Optional[str], t0: int, t1: int) -> list[dict]:
        out = []
        for seg in self.manifest["segments"]:
            if root is not None and seg["root"] != root:
                continue
            if seg["t_min"] is None or seg["t_max"] < t0 or seg["t_min"] > t1:
                continue
            out.append(seg)
        return out

    def _load(self, seg_id: str, collection: str) -> Optional[dict]:
        key = f"{seg_id}.{collection}"
        if key not in self._segment_cache:
            path = self.location / "seg" / f"{key}.npz"
            if not path.exists():
                self._segment_cache[key] = None
            else:
                with np.load(path) as z:
                    self._segment_cache[key] = {k: z[k] for k in z.files}
        return self._segment_cache[key]

    def list_roots(self, t0: int, t1: int) -> list[tuple[RpcName, int]]:
        """Roots having ≥1 e2e record with timestamp in [t0, t1], with exact
        request counts, sorted by canonical name."""
        if t0 > t1:
            raise ValueError("t0 must be ≤ t1")
        counts: dict[str, int] = {}
        for seg in self._segments_for(None, t0, t1):
            data = self._load(seg["id"], "e2e")
            if data is None:
                continue
            ts = data["timestamp"]
            n = int(((ts >= t0) & (ts <= t1)).sum())
            if n:
                counts[seg["root"]] = counts.get(seg["root"], 0) + n
        return [(RpcName.parse(root), n) for root, n in sorted(counts.items())]

    @staticmethod
    def _merge_coded(parts: list[dict], table_key: str, code_key: str) -> tuple:
        """Merge per-segment dictionary-coded columns into one union table.

        Segment tables are sorted, so codes are lexicographic ranks; the
        union table preserves that, letting later sorts run on integers.
        """
        if len(parts) == 1:
            return parts[0][table_key], parts[0][code_key].astype(np.int64)
        union = np.unique(np.concatenate([p[table_key] for p in parts]))
        codes = np.concatenate([
            np.searchsorted(union, p[table_key])[p[code_key]] for p in parts
        ]).astype(np.int64)
        return union, codes

    def query_paths_coded(self, root: RpcName, t0: int, t1: int) -> dict:
        """Dictionary-coded columnar path records for the closed window,
        ordered by (timestamp, trace_id, path). Keys: path_code/trace_code
        index into the sorted path_table/trace_table string arrays."""
        if t0 > t1:
            raise ValueError("t0 must be ≤ t1")
        parts = []
        for seg in self._segments_for(root.canonical, t0, t1):
            data = self._load(seg["id"], "paths")
            if data is None:
                continue
            mask = (data["timestamp"] >= t0) & (data["timestamp"] <= t1)
            if not mask.any():
                continue
            parts.append({
                "path_table": data["path_table"],
                "trace_table": data["trace_table"],
                "path_code": data["path_idx"][mask],
                "trace_code": data["trace_idx"][mask],
                "occurrences": data["occurrences"][mask],
                "exec_mean": data["exec_mean"][mask],
                "timestamp": data["timestamp"][mask],
                "kind": data["kind"][mask],
            })
        if not parts:
            return {
                "path_table": np.array([], dtype=str),
                "trace_table": np.array([], dtype=str),
                "path_code": np.array([], dtype=np.int64),
                "trace_code": np.array([], dtype=np.int64),
                "occurrences": np.array([], dtype=np.int64),
                "exec_mean": np.array([], dtype=np.float64),
                "timestamp": np.array([], dtype=np.int64),
                "kind": np.array([], dtype=np.uint8),
            }
        path_table, path_code = self._merge_coded(parts, "path_table", "path_code")
        trace_table, trace_code = self._merge_coded(parts, "trace_table", "trace_code")
        merged = {k: np.concatenate([p[k] for p in parts])
                  for k in ("occurrences", "exec_mean", "timestamp", "kind")}
        order = np.lexsort((path_code, trace_code, merged["timestamp"]))
        out = {k: v[order] for k, v in merged.items()}
        out["path_code"] = path_code[order]
        out["trace_code"] = trace_code[order]
        out["path_table"] = path_table
        out["trace_table"] = trace_table
        return out

    def query_e2e_coded(self, root: RpcName, t0: int, t1: int) -> dict:
        if t0 > t1:
            raise ValueError("t0 must be ≤ t1")
        parts = []
        for seg in self._segments_for(root.canonical, t0, t1):
            data = self._load(seg["id"], "e2e")
            if data is None:
                continue
            mask = (data["timestamp"] >= t0) & (data["timestamp"] <= t1)
            if not mask.any():
                continue
            parts.append({
                "trace_table": data["trace_table"],
                "trace_code": data["trace_idx"][mask],
                "response_time": data["response_time"][mask],
                "timestamp": data["timestamp"][mask],
            })
        if not parts:
            return {
                "trace_table": np.array([], dtype=str),
                "trace_code": np.array([], dtype=np.int64),
                "response_time": np.array([], dtype=np.int64),
                "timestamp": np.array([], dtype=np.int64),
            }
        trace_table, trace_code = self._merge_coded(parts, "trace_table", "trace_code")
        merged = {k: np.concatenate([p[k] for p in parts])
                  for k in ("response_time", "timestamp")}
        order = np.lexsort((trace_code, merged["timestamp"]))
        out = {k: v[order] for k, v in merged.items()}
        out["trace_code"] = trace_code[order]
        out["trace_table"] = trace_table
        return out

    def query_paths_arrays(self, root: RpcName, t0: int, t1: int) -> dict:
        """Columnar view of query_paths with decoded strings, ordered like
        the record stream."""
        coded = self.query_paths_coded(root, t0, t1)
        return {
            "path": coded["path_table"][coded["path_code"]]
                    if len(coded["path_code"]) else np.array([], dtype=str),
            "trace_id": coded["trace_table"][coded["trace_code"]]
                        if len(coded["trace_code"]) else np.array([], dtype=str),
            "occurrences": coded["occurrences"],
            "exec_mean": coded["exec_mean"],
            "timestamp": coded["timestamp"],
            "kind": coded["kind"],
        }

    def query_e2e_arrays(self, root: RpcName, t0: int, t1: int) -> dict:
        coded = self.query_e2e_coded(root, t0, t1)
        return {
            "trace_id": coded["trace_table"][coded["trace_code"]]
                        if len(coded["trace_code"]) else np.array([], dtype=str),
            "response_time": coded["response_time"],
            "timestamp": coded["timestamp"],
        }

    def query_paths(self, root: RpcName, t0: int, t1: int) -> Iterator[PathRecord]:
        """All path records for the root with timestamp in the closed
        interval [t0, t1], ordered by (timestamp, trace_id, path)."""
        arrays = self.query_paths_arrays(root, t0, t1)
        for path, tid, occ, mean, ts, kind in zip(
            arrays["path"], arrays["trace_id"], arrays["occurrences"],
            arrays["exec_mean"], arrays["timestamp"], arrays["kind"],
        ):
            yield PathRecord(
                path=PathKey.parse(str(path)),
                trace_id=str(tid),
                occurrences=int(occ),
                exec_time_mean=float(mean),
                timestamp=int(ts),
                kind=_KIND_NAMES[int(kind)],
            )

    def query_e2e(self, root: RpcName, t0: int, t1: int) -> Iterator[E2ERecord]:
        arrays = self.query_e2e_arrays(root, t0, t1)
        for tid, rt, ts in zip(arrays["trace_id"], arrays["response_time"], arrays["timestamp"]):
            yield E2ERecord(
                root_rpc=root,
                trace_id=str(tid),
                response_time=int(rt),
                timestamp=int(ts),
            )

    # -- inspection ------------------------------------------------------------

    def inspect(self) -> str:
        """Human-readable manifest dump for the `store inspect` command."""
        m = self.manifest
        lines = [
            f"store: {self.location}",
            f"format_version: {m['format_version']}",
            f"segments: {len(m['segments'])}",
            f"processed_traces: {m['processed_count']}",
            f"processed_digest: {m['processed_digest']}",
            "roots:",
        ]
        for root, counts in sorted(m["roots"].items()):
            lines.append(
                f"  {root}: {counts['e2e_records']} requests, "
                f"{counts['path_records']} path records")
        for seg in m["segments"]:
            lines.append(
                f"  seg {seg['id']} root={seg['root']} day={seg['day']} "
                f"ts=[{seg['t_min']},{seg['t_max']}] "
                f"paths={seg['n_paths']} e2e={seg['n_e2e']}")
        return "\n".join(lines)
