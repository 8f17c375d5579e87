"""
Data model for dynamic multigraphs.

A temporal edge list is parsed into EdgeRecords, windowed into Snapshots
(one undirected multigraph per time step over a fixed node universe) and
collected into a DynamicNetwork. Edge multiplicities are stored sparsely as
three parallel numpy arrays (rows, cols, counts) with rows < cols, sorted by
pair so two snapshots can be aligned with a merge.

Input format, one record per line:

    timestamp src dst [count]

Fields are separated by whitespace or a single comma; lines starting with
'#' are ignored. Node labels are arbitrary strings, interned to dense ids in
first-seen order.
"""

import logging
import re
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import sparse

from errors import (
    ConfigError,
    DataError,
    EmptySnapshotError,
    ParseError,
    RejectedRecordError,
    TimeIndexError,
)

logger = logging.getLogger(__name__)

NodeId = int
Pair = tuple[NodeId, NodeId]

PROB_TOLERANCE = 1e-9
FIELD_SEPARATOR = re.compile(r"\s*,\s*|\s+")


class EdgeRecord(NamedTuple):
    timestamp: int
    i: NodeId
    j: NodeId
    count: int


@dataclass(frozen=True)
class StreamSchema:
    comment: str = "#"
    strict: bool = True  # False: skip malformed lines instead of raising


@dataclass(frozen=True)
class EdgeStream:
    """Parsed records plus the label table (NodeId -> label)."""

    records: tuple[EdgeRecord, ...]
    labels: tuple[str, ...]


def _freeze(arr: np.ndarray, dtype) -> np.ndarray:
    arr = np.array(arr, dtype=dtype, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


def _canonical_pairs(n_nodes: int, src, dst, weights, dtype):
    """Collapse direction, merge duplicate pairs and sort by pair key."""
    src = np.asarray(src, dtype=np.int64).reshape(-1)
    dst = np.asarray(dst, dtype=np.int64).reshape(-1)
    weights = np.asarray(weights, dtype=dtype).reshape(-1)
    if not (len(src) == len(dst) == len(weights)):
        raise DataError("edge arrays must have equal length")
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    keys, inverse = np.unique(lo * n_nodes + hi, return_inverse=True)
    summed = np.zeros(len(keys), dtype=dtype)
    np.add.at(summed, inverse, weights)
    return keys // n_nodes, keys % n_nodes, summed


def _validate_pairs(n_nodes: int, rows: np.ndarray, cols: np.ndarray, what: str):
    if n_nodes < 1:
        raise DataError(f"{what}: n_nodes must be positive, got {n_nodes}")
    if not (len(rows) == len(cols)):
        raise DataError(f"{what}: pair arrays must have equal length")
    if len(rows) == 0:
        return
    if np.any(rows == cols):
        raise DataError(f"{what}: self-loops are not allowed")
    if np.any(rows > cols):
        raise DataError(f"{what}: pairs must be stored with i < j")
    if rows.min() < 0 or cols.max() >= n_nodes:
        raise DataError(f"{what}: node index outside [0, {n_nodes})")
    keys = rows * n_nodes + cols
    if np.any(np.diff(keys) <= 0):
        raise DataError(f"{what}: pairs must be unique and sorted")


def _symmetric_matrix(n_nodes: int, rows, cols, values) -> sparse.csr_matrix:
    upper = sparse.coo_matrix(
        (np.asarray(values, dtype=np.float64), (rows, cols)), shape=(n_nodes, n_nodes)
    )
    return (upper + upper.T).tocsr()


@dataclass(frozen=True, eq=False)
class Snapshot:
    """One time step: undirected multigraph over nodes 0..n_nodes-1."""

    t: int
    n_nodes: int
    rows: np.ndarray
    cols: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", _freeze(self.rows, np.int64))
        object.__setattr__(self, "cols", _freeze(self.cols, np.int64))
        object.__setattr__(self, "counts", _freeze(self.counts, np.int64))
        _validate_pairs(self.n_nodes, self.rows, self.cols, f"snapshot t={self.t}")
        if len(self.counts) != len(self.rows):
            raise DataError(f"snapshot t={self.t}: one count per pair required")
        if len(self.counts) and self.counts.min() < 1:
            raise DataError(f"snapshot t={self.t}: multiplicities must be >= 1")

    @classmethod
    def from_arrays(cls, t: int, n_nodes: int, src, dst, counts=None) -> "Snapshot":
        """Build from possibly directed, duplicated endpoint arrays. Self-loops are dropped."""
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        counts = np.ones(len(src), dtype=np.int64) if counts is None else np.asarray(counts)
        if len(counts) and np.min(counts) < 1:
            raise DataError(f"snapshot t={t}: multiplicities must be >= 1")
        keep = src != dst
        if not keep.all():
            logger.debug("t=%d: dropped %d self-loop entries", t, int((~keep).sum()))
        rows, cols, summed = _canonical_pairs(
            n_nodes, src[keep], dst[keep], counts[keep], np.int64
        )
        return cls(t, n_nodes, rows, cols, summed)

    @classmethod
    def from_edges(cls, t: int, n_nodes: int, edges: Mapping[Pair, int]) -> "Snapshot":
        """Build from a {(i, j): count} mapping."""
        pairs = list(edges.items())
        src = [i for (i, _), _ in pairs]
        dst = [j for (_, j), _ in pairs]
        counts = [c for _, c in pairs]
        return cls.from_arrays(t, n_nodes, src, dst, counts)

    @classmethod
    def empty(cls, t: int, n_nodes: int) -> "Snapshot":
        """Snapshot with no edges."""
        return cls(t, n_nodes, [], [], [])

    @property
    def keys(self) -> np.ndarray:
        return self.rows * self.n_nodes + self.cols

    @property
    def n_pairs(self) -> int:
        return len(self.rows)

    def edge_count(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict[Pair, int]:
        return {
            (int(i), int(j)): int(c) for i, j, c in zip(self.rows, self.cols, self.counts)
        }

    def degrees(self) -> np.ndarray:
        """Weighted degree of every node."""
        deg = np.bincount(self.rows, weights=self.counts, minlength=self.n_nodes)
        deg += np.bincount(self.cols, weights=self.counts, minlength=self.n_nodes)
        return deg.astype(np.int64)

    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric weighted adjacency (weights = multiplicities)."""
        return _symmetric_matrix(self.n_nodes, self.rows, self.cols, self.counts)

    def __eq__(self, other):
        if not isinstance(other, Snapshot):
            return NotImplemented
        return (
            self.t == other.t
            and self.n_nodes == other.n_nodes
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"Snapshot(t={self.t}, n_nodes={self.n_nodes}, "
            f"pairs={self.n_pairs}, edges={self.edge_count()})"
        )


@dataclass(frozen=True, eq=False)
class EdgeDistribution:
    """Probability matrix P over node pairs (i < j); total mass is 1."""

    n_nodes: int
    rows: np.ndarray
    cols: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rows", _freeze(self.rows, np.int64))
        object.__setattr__(self, "cols", _freeze(self.cols, np.int64))
        object.__setattr__(self, "probs", _freeze(self.probs, np.float64))
        _validate_pairs(self.n_nodes, self.rows, self.cols, "edge distribution")
        if len(self.probs) != len(self.rows):
            raise DataError("edge distribution: one probability per pair required")
        if len(self.probs) == 0:
            raise DataError("edge distribution: empty distribution")
        if self.probs.min() <= 0.0 or self.probs.max() > 1.0:
            raise DataError("edge distribution: probabilities must lie in (0, 1]")
        total = float(self.probs.sum())
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise DataError(f"edge distribution: mass sums to {total!r}, not 1")

    @classmethod
    def from_weights(cls, n_nodes: int, src, dst, weights) -> "EdgeDistribution":
        """Normalise non-negative pair weights; zero-weight pairs are left out."""
        weights = np.asarray(weights, dtype=np.float64)
        if len(weights) and weights.min() < 0:
            raise DataError("edge distribution: weights must be non-negative")
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        keep = (weights > 0) & (src != dst)
        if not keep.any():
            raise DataError("edge distribution: no positive weight")
        rows, cols, summed = _canonical_pairs(
            n_nodes, src[keep], dst[keep], weights[keep], np.float64
        )
        return cls(n_nodes, rows, cols, summed / summed.sum())

    @classmethod
    def from_mapping(cls, n_nodes: int, probs: Mapping[Pair, float]) -> "EdgeDistribution":
        """Build from an explicit {(i, j): p} table without renormalising."""
        items = sorted(((min(i, j), max(i, j)), p) for (i, j), p in probs.items())
        rows = [i for (i, _), _ in items]
        cols = [j for (_, j), _ in items]
        return cls(n_nodes, rows, cols, [p for _, p in items])

    @property
    def keys(self) -> np.ndarray:
        return self.rows * self.n_nodes + self.cols

    @property
    def n_pairs(self) -> int:
        return len(self.rows)

    def as_dict(self) -> dict[Pair, float]:
        return {
            (int(i), int(j)): float(p) for i, j, p in zip(self.rows, self.cols, self.probs)
        }

    def probabilistic_degrees(self) -> np.ndarray:
        """Probability mass on the pairs touching each node."""
        pd = np.bincount(self.rows, weights=self.probs, minlength=self.n_nodes)
        return pd + np.bincount(self.cols, weights=self.probs, minlength=self.n_nodes)

    def adjacency(self) -> sparse.csr_matrix:
        return _symmetric_matrix(self.n_nodes, self.rows, self.cols, self.probs)

    def __eq__(self, other):
        if not isinstance(other, EdgeDistribution):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.probs, other.probs)
        )

    __hash__ = None

    def __repr__(self):
        return f"EdgeDistribution(n_nodes={self.n_nodes}, pairs={self.n_pairs})"


@dataclass(frozen=True)
class DynamicNetwork:
    """Snapshots with strictly increasing t over one shared node universe."""

    snapshots: tuple[Snapshot, ...]
    n_nodes: int
    labels: tuple[str, ...] = ()
    dropped_self_loops: int = 0

    def __post_init__(self):
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.snapshots:
            raise DataError("dynamic network has no snapshots")
        for s in self.snapshots:
            if s.n_nodes != self.n_nodes:
                raise DataError(
                    f"snapshot t={s.t} has {s.n_nodes} nodes, network has {self.n_nodes}"
                )
        times = [s.t for s in self.snapshots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DataError("snapshot times must be strictly increasing")
        if len(self.labels) > self.n_nodes:
            raise DataError("more labels than nodes")

    @cached_property
    def _by_time(self) -> dict[int, Snapshot]:
        return {s.t: s for s in self.snapshots}

    @property
    def times(self) -> tuple[int, ...]:
        return tuple(s.t for s in self.snapshots)

    def __len__(self):
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    def has(self, t: int) -> bool:
        return t in self._by_time

    def at(self, t: int) -> Snapshot:
        """Snapshot at time t."""
        try:
            return self._by_time[t]
        except KeyError:
            raise TimeIndexError(
                f"no snapshot at t={t} (stream covers {self.times[0]}..{self.times[-1]})"
            ) from None

    def label_of(self, i: NodeId) -> str:
        """Original label of a node."""
        return self.labels[i] if i < len(self.labels) else str(i)

    def edge_counts(self) -> np.ndarray:
        """|E_t| per snapshot, in time order."""
        return np.array([s.edge_count() for s in self.snapshots], dtype=np.int64)


# --- ingestion -------------------------------------------------------------


def _read_lines(source) -> Iterable[str]:
    if isinstance(source, Path):
        with open(source, "r", encoding="utf-8") as f:
            return f.read().splitlines()
    if isinstance(source, str):
        return source.splitlines()
    return source


def _parse_fields(fields: list[str], line_no: int) -> tuple[int, str, str, int]:
    if len(fields) not in (3, 4) or any(not f for f in fields):
        raise ParseError(line_no, f"expected 'timestamp src dst [count]', got {len(fields)} fields")
    try:
        timestamp = int(fields[0])
    except ValueError:
        raise ParseError(line_no, f"timestamp {fields[0]!r} is not an integer") from None
    count = 1
    if len(fields) == 4:
        try:
            count = int(fields[3])
        except ValueError:
            raise ParseError(line_no, f"count {fields[3]!r} is not an integer") from None
        if count <= 0:
            raise RejectedRecordError(line_no, f"count must be positive, got {count}")
    return timestamp, fields[1], fields[2], count


def parse_edge_stream(source, schema: StreamSchema = StreamSchema()) -> EdgeStream:
    """
    Parse a temporal edge list.

    source: a Path (read as UTF-8), a str holding the text itself, or an
    iterable of lines. Records come back in file order.
    """
    ids: dict[str, NodeId] = {}
    records: list[EdgeRecord] = []
    skipped = 0

    def intern(label: str) -> NodeId:
        if label not in ids:
            ids[label] = len(ids)
        return ids[label]

    for line_no, raw in enumerate(_read_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith(schema.comment):
            continue
        try:
            timestamp, src, dst, count = _parse_fields(FIELD_SEPARATOR.split(line), line_no)
        except ParseError:
            if schema.strict:
                raise
            skipped += 1
            continue
        records.append(EdgeRecord(timestamp, intern(src), intern(dst), count))

    if skipped:
        logger.warning("skipped %d malformed lines", skipped)
    return EdgeStream(tuple(records), tuple(ids))


def window_into_snapshots(
    stream: EdgeStream, window_width: int, n_nodes_override: int | None = None
) -> DynamicNetwork:
    """
    Bucket records into snapshots t = floor(timestamp / window_width).

    Every window between the first and last one is materialised, empty or not,
    so time indexing stays contiguous.
    """
    if window_width < 1:
        raise ConfigError(f"window width must be >= 1, got {window_width}")
    if not stream.records:
        raise DataError("edge stream has no records")

    table = np.array(stream.records, dtype=np.int64).reshape(-1, 4)
    max_id = int(table[:, 1:3].max())
    n_nodes = max(len(stream.labels), max_id + 1)
    if n_nodes_override is not None:
        if n_nodes_override < max_id + 1:
            raise ConfigError(
                f"n_nodes override {n_nodes_override} is smaller than the {max_id + 1} nodes seen"
            )
        n_nodes = n_nodes_override

    steps = np.floor_divide(table[:, 0], window_width)
    loops = table[:, 1] == table[:, 2]
    n_loops = int(loops.sum())
    if n_loops:
        logger.warning("dropped %d self-loop records", n_loops)

    kept = table[~loops]
    kept_steps = steps[~loops]
    order = np.argsort(kept_steps, kind="stable")
    kept, kept_steps = kept[order], kept_steps[order]

    first, last = int(steps.min()), int(steps.max())
    times = np.arange(first, last + 1)
    bounds = np.searchsorted(kept_steps, np.append(times, last + 1))
    snapshots = []
    for k, t in enumerate(times):
        chunk = kept[bounds[k]:bounds[k + 1]]
        snapshots.append(
            Snapshot.from_arrays(int(t), n_nodes, chunk[:, 1], chunk[:, 2], chunk[:, 3])
        )
    return DynamicNetwork(tuple(snapshots), n_nodes, stream.labels, n_loops)


# --- per-snapshot quantities ----------------------------------------------


def empirical_distribution(s: Snapshot) -> EdgeDistribution:
    """p_ij = e_ij / |E_t| over the pairs present in the snapshot."""
    total = s.edge_count()
    if total == 0:
        raise EmptySnapshotError(f"snapshot t={s.t} has no edges")
    return EdgeDistribution(s.n_nodes, s.rows, s.cols, s.counts / total)


def _check_node(n_nodes: int, i: NodeId):
    if not 0 <= i < n_nodes:
        raise IndexError(f"node {i} outside [0, {n_nodes})")


def degree(s: Snapshot, i: NodeId) -> int:
    """Weighted degree of node i."""
    _check_node(s.n_nodes, i)
    touching = (s.rows == i) | (s.cols == i)
    return int(s.counts[touching].sum())


def probabilistic_degree(d: EdgeDistribution, i: NodeId) -> float:
    """Probability that a draw from d touches node i."""
    _check_node(d.n_nodes, i)
    touching = (d.rows == i) | (d.cols == i)
    return float(d.probs[touching].sum())
