"""Data ingestion and on-disk formats.

A series lives in a directory: ``edges.tsv`` holds one sparse row per
(t, i, j, value) with a header line, and ``meta.json`` carries the node
roster, orientation, nodal attributes and dyadic covariate matrices.  The
writer emits a canonical form (sorted rows, fixed key order) so a
save/load/save round trip is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .networks import DataError, NetworkSeries, ValuedNetwork
from .statistics import ModelSpec, StatisticSpec

__all__ = [
    "ContactEvent",
    "load_events",
    "aggregate_contacts",
    "save_series",
    "load_series",
    "load_model_config",
    "save_fit",
]


@dataclass(frozen=True)
class ContactEvent:
    timestamp: int
    i: str
    j: str

    def __post_init__(self):
        if self.i == self.j:
            raise DataError(f"self-contact at timestamp {self.timestamp}")
        if self.timestamp < 0:
            raise DataError("timestamps must be nonnegative")


def load_events(path) -> list[ContactEvent]:
    """Read a whitespace/tab separated event log: timestamp, node, node."""
    events = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 3:
                raise DataError(f"{path}:{lineno}: expected 'timestamp i j'")
            try:
                ts = int(parts[0])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad timestamp {parts[0]!r}") from exc
            events.append(ContactEvent(ts, parts[1], parts[2]))
    return events


def aggregate_contacts(
    events: list[ContactEvent],
    bucket: int = 86400,
    merge_gap: int = 20,
    roster: list[str] | None = None,
    origin: int | None = None,
) -> NetworkSeries:
    """Aggregate raw contact events into daily (or other-bucket) count networks.

    Within a bucket, consecutive events for the same unordered pair whose
    gap is at most ``merge_gap`` seconds merge into one contact; the dyad
    value is the number of merged contacts.  Events for nodes outside a
    declared roster are an error; without a roster the node set is inferred.
    """
    if not events:
        raise DataError("no events to aggregate")
    events = sorted(events, key=lambda e: e.timestamp)
    if roster is None:
        seen: dict[str, None] = {}
        for e in events:
            seen.setdefault(e.i)
            seen.setdefault(e.j)
        roster = sorted(seen)
    else:
        roster = list(roster)
        known = set(roster)
        for e in events:
            if e.i not in known or e.j not in known:
                bad = e.i if e.i not in known else e.j
                raise DataError(f"unknown node identifier {bad!r} at timestamp {e.timestamp}")
    index = {node: k for k, node in enumerate(roster)}
    n = len(roster)
    if origin is None:
        origin = events[0].timestamp
    n_buckets = (events[-1].timestamp - origin) // bucket + 1
    counts = [np.zeros((n, n), dtype=np.int64) for _ in range(n_buckets)]
    last_seen: dict[tuple[int, int, int], int] = {}
    for e in events:
        b = (e.timestamp - origin) // bucket
        if b < 0:
            raise DataError(f"timestamp {e.timestamp} precedes origin {origin}")
        a, c = sorted((index[e.i], index[e.j]))
        key = (b, a, c)
        prev_ts = last_seen.get(key)
        if prev_ts is None or e.timestamp - prev_ts > merge_gap:
            counts[b][a, c] += 1
            counts[b][c, a] += 1
        last_seen[key] = e.timestamp
    networks = tuple(ValuedNetwork(mat, directed=False) for mat in counts)
    if len(networks) < 2:
        raise DataError("aggregation produced fewer than two buckets; check bucket size")
    return NetworkSeries(networks=networks, nodes=tuple(roster))


def save_series(series: NetworkSeries, path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    nodes = list(series.nodes) if series.nodes is not None else [str(k) for k in range(series.n)]
    lines = ["t\ti\tj\tvalue"]
    for t, net in enumerate(series.networks, start=1):
        v = net.values
        if net.directed:
            idx = [(i, j) for i in range(series.n) for j in range(series.n) if i != j]
        else:
            idx = [(i, j) for i in range(series.n) for j in range(i + 1, series.n)]
        for i, j in idx:
            if v[i, j]:
                lines.append(f"{t}\t{nodes[i]}\t{nodes[j]}\t{int(v[i, j])}")
    (path / "edges.tsv").write_text("\n".join(lines) + "\n")
    meta = {
        "nodes": nodes,
        "directed": series.directed,
        "T": series.T,
        "nodal_attrs": {k: list(v) for k, v in sorted(series.nodal_attrs.items())},
        "dyadic_covs": {
            k: np.asarray(v).tolist() for k, v in sorted(series.dyadic_covs.items())
        },
    }
    (path / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_series(path) -> NetworkSeries:
    path = Path(path)
    meta_path = path / "meta.json"
    edges_path = path / "edges.tsv"
    if not meta_path.exists() or not edges_path.exists():
        raise DataError(f"{path} is not a series directory (need edges.tsv and meta.json)")
    meta = json.loads(meta_path.read_text())
    nodes = list(meta["nodes"])
    index = {node: k for k, node in enumerate(nodes)}
    n = len(nodes)
    T = int(meta["T"])
    directed = bool(meta["directed"])
    mats = [np.zeros((n, n), dtype=np.int64) for _ in range(T)]
    with open(edges_path) as fh:
        header = fh.readline()
        if header.strip() != "t\ti\tj\tvalue":
            raise DataError(f"{edges_path}:1: unexpected header {header.strip()!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"{edges_path}:{lineno}: expected 4 tab-separated fields")
            try:
                t = int(parts[0])
                val = int(parts[3])
            except ValueError as exc:
                raise DataError(f"{edges_path}:{lineno}: bad integer field") from exc
            if not 1 <= t <= T:
                raise DataError(f"{edges_path}:{lineno}: time index {t} out of range [1, {T}]")
            for name in parts[1:3]:
                if name not in index:
                    raise DataError(f"{edges_path}:{lineno}: unknown node {name!r}")
            i, j = index[parts[1]], index[parts[2]]
            mats[t - 1][i, j] = val
            if not directed:
                mats[t - 1][j, i] = val
    return NetworkSeries(
        networks=tuple(ValuedNetwork(m, directed=directed) for m in mats),
        nodal_attrs={k: list(v) for k, v in meta.get("nodal_attrs", {}).items()},
        dyadic_covs={k: np.asarray(v, float) for k, v in meta.get("dyadic_covs", {}).items()},
        nodes=tuple(nodes),
    )


def _parse_stat(entry: dict) -> StatisticSpec:
    entry = dict(entry)
    kind = entry.pop("kind", None)
    if kind is None:
        raise DataError("each statistic needs a 'kind'")
    levels = entry.pop("levels", None)
    return StatisticSpec(
        kind=kind,
        attr=entry.pop("attr", None),
        level=entry.pop("level", None),
        levels=tuple(levels) if levels else None,
        cov=entry.pop("cov", None),
    )


def load_model_config(path) -> dict:
    """Parse a declarative model/run config (YAML).

    Returns a dict with keys ``model`` (ModelSpec) and ``schedule``
    (overrides dict, possibly empty).
    """
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "statistics" not in raw:
        raise DataError(f"{path}: config needs a 'statistics' list")
    stats = [_parse_stat(e) for e in raw["statistics"]]
    aug = [_parse_stat(e) for e in raw["aug_statistics"]] if "aug_statistics" in raw else stats
    dim = [_parse_stat(e) for e in raw["dim_statistics"]] if "dim_statistics" in raw else stats
    m = raw.get("m")
    if m == "per-interval":
        m = None
    model = ModelSpec(
        aug_stats=tuple(aug),
        dim_stats=tuple(dim),
        m=m,
        pi0=float(raw.get("pi0", 0.2)),
        heterogeneous=bool(raw.get("heterogeneous", False)),
    )
    return {"model": model, "schedule": dict(raw.get("schedule", {}))}


def save_fit(result, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(result.to_dict(), fh, sort_keys=False)
