"""Directed weighted graphs in compressed sparse row form.

A graph is immutable once built. Forward (out-neighbor) and reverse
(in-neighbor) adjacency describe one canonical edge multiset: parallel edges
merged, neighbor lists sorted by id, weights finite positive doubles.
Self-loops are legal. Because the form is canonical, graph equality is plain
array equality, which the determinism suite relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Graph",
    "GraphFormatError",
    "NeighborUnion",
    "Strengths",
    "aggregate",
    "canonicalize_labels",
    "compose_labels",
    "dump_edge_list",
    "load_edge_list",
    "read_partition",
    "strengths",
    "write_partition",
]


class GraphFormatError(ValueError):
    """Malformed edge-list or partition input."""


@dataclass(frozen=True)
class Strengths:
    """Out/in strength per node and the total edge weight m_w."""

    s_out: np.ndarray
    s_in: np.ndarray
    m_w: float


@dataclass(frozen=True)
class NeighborUnion:
    """Per-node union of out- and in-neighbors, self-loops excluded.

    For row i, entry e covers neighbor j = nbr[e] with w_out[e] = W(i, j) and
    w_in[e] = W(j, i); a pair appearing in only one direction carries 0 in the
    other column. Rows are sorted by neighbor id. This is the access pattern
    of every gain kernel, so it is built once per graph and cached.
    """

    ptr: np.ndarray
    nbr: np.ndarray
    row: np.ndarray
    w_out: np.ndarray
    w_in: np.ndarray


class Graph:
    """Immutable directed weighted graph; dense 0-based node ids."""

    def __init__(self, n, out_ptr, out_dst, out_w, in_ptr, in_src, in_w):
        self.n = int(n)
        self.out_ptr = out_ptr
        self.out_dst = out_dst
        self.out_w = out_w
        self.in_ptr = in_ptr
        self.in_src = in_src
        self.in_w = in_w
        for arr in (out_ptr, out_dst, out_w, in_ptr, in_src, in_w):
            arr.setflags(write=False)
        self._union: NeighborUnion | None = None
        self._rows: np.ndarray | None = None

    @property
    def edge_count(self) -> int:
        return int(self.out_dst.shape[0])

    @classmethod
    def from_edges(cls, n, src, dst, w) -> "Graph":
        """Build the canonical form from parallel arrays of directed edges."""
        n = int(n)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        if not (src.shape == dst.shape == w.shape):
            raise ValueError("src, dst, w must have equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise ValueError("edge endpoint out of range")
            if not np.isfinite(w).all() or (w <= 0).any():
                raise ValueError("edge weights must be finite and positive")
        # canonical order + parallel-edge merge (stable sort keeps input order
        # inside each duplicate group, so merged sums are deterministic)
        order = np.lexsort((dst, src))
        src, dst, w = src[order], dst[order], w[order]
        if src.size:
            new_group = np.empty(src.size, dtype=bool)
            new_group[0] = True
            new_group[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            starts = np.flatnonzero(new_group)
            src = src[starts]
            dst = dst[starts]
            w = np.add.reduceat(w, starts)
        out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=out_ptr[1:])
        rev = np.argsort(dst, kind="stable")  # by (dst, src): src already sorted
        in_src = src[rev]
        in_w = w[rev]
        in_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(dst, minlength=n), out=in_ptr[1:])
        return cls(n, out_ptr, dst, w, in_ptr, in_src, in_w)

    def edge_rows(self) -> np.ndarray:
        """Source node per forward edge (cached)."""
        if self._rows is None:
            rows = np.repeat(np.arange(self.n, dtype=np.int64),
                             np.diff(self.out_ptr))
            rows.setflags(write=False)
            self._rows = rows
        return self._rows

    def neighbor_union(self) -> NeighborUnion:
        if self._union is None:
            self._union = _build_union(self)
        return self._union

    def out_slice(self, i):
        lo, hi = self.out_ptr[i], self.out_ptr[i + 1]
        return self.out_dst[lo:hi], self.out_w[lo:hi]

    def in_slice(self, i):
        lo, hi = self.in_ptr[i], self.in_ptr[i + 1]
        return self.in_src[lo:hi], self.in_w[lo:hi]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in ("out_ptr", "out_dst", "out_w", "in_ptr", "in_src", "in_w"))

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.edge_count})"


def _build_union(g: Graph) -> NeighborUnion:
    rows_f = g.edge_rows()
    rows_r = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.in_ptr))
    mf = g.out_dst != rows_f
    mr = g.in_src != rows_r
    row = np.concatenate([rows_f[mf], rows_r[mr]])
    nbr = np.concatenate([g.out_dst[mf], g.in_src[mr]])
    w_out = np.concatenate([g.out_w[mf], np.zeros(int(mr.sum()))])
    w_in = np.concatenate([np.zeros(int(mf.sum())), g.in_w[mr]])
    order = np.lexsort((nbr, row))
    row, nbr, w_out, w_in = row[order], nbr[order], w_out[order], w_in[order]
    if row.size:
        new_group = np.empty(row.size, dtype=bool)
        new_group[0] = True
        new_group[1:] = (row[1:] != row[:-1]) | (nbr[1:] != nbr[:-1])
        starts = np.flatnonzero(new_group)
        w_out = np.add.reduceat(w_out, starts)
        w_in = np.add.reduceat(w_in, starts)
        row = row[starts]
        nbr = nbr[starts]
    ptr = np.zeros(g.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(row, minlength=g.n), out=ptr[1:])
    for arr in (ptr, nbr, row, w_out, w_in):
        arr.setflags(write=False)
    return NeighborUnion(ptr, nbr, row, w_out, w_in)


def load_edge_list(path: str) -> Graph:
    """Parse `src dst [weight]` lines; weight defaults to 1.0.

    `#` starts a comment; the special comment `# nodes N` declares trailing
    isolated nodes. Bad ids or non-positive/non-finite weights are rejected
    with the offending line number.
    """
    srcs: list[int] = []
    dsts: list[int] = []
    ws: list[float] = []
    declared = -1
    max_id = -1
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "nodes":
                    try:
                        declared = max(declared, int(parts[1]))
                    except ValueError:
                        raise GraphFormatError(
                            f"line {lineno}: bad node-count header: {line!r}")
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise GraphFormatError(
                    f"line {lineno}: expected 'src dst [weight]', got {line!r}")
            try:
                s = int(parts[0])
                d = int(parts[1])
            except ValueError:
                raise GraphFormatError(
                    f"line {lineno}: node ids must be integers: {line!r}")
            if s < 0 or d < 0:
                raise GraphFormatError(
                    f"line {lineno}: node ids must be non-negative: {line!r}")
            if len(parts) == 3:
                try:
                    weight = float(parts[2])
                except ValueError:
                    raise GraphFormatError(
                        f"line {lineno}: bad weight: {line!r}")
            else:
                weight = 1.0
            if not math.isfinite(weight) or weight <= 0.0:
                raise GraphFormatError(
                    f"line {lineno}: weight must be finite and > 0: {line!r}")
            srcs.append(s)
            dsts.append(d)
            ws.append(weight)
            if s > max_id:
                max_id = s
            if d > max_id:
                max_id = d
    if declared >= 0 and declared < max_id + 1:
        raise GraphFormatError(
            f"node-count header declares {declared} nodes but ids reach {max_id}")
    n = max(declared, max_id + 1, 0)
    return Graph.from_edges(n,
                            np.array(srcs, dtype=np.int64),
                            np.array(dsts, dtype=np.int64),
                            np.array(ws, dtype=np.float64))


def dump_edge_list(graph: Graph, path: str, header_lines=()) -> None:
    """Write the canonical edge list: `# nodes N`, then `src dst %.17g` rows."""
    rows = graph.edge_rows()
    lines = [f"# {h}" for h in header_lines]
    lines.append(f"# nodes {graph.n}")
    for s, d, w in zip(rows, graph.out_dst, graph.out_w):
        lines.append("%d %d %.17g" % (s, d, w))
    lines.append("")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines))


def strengths(graph: Graph) -> Strengths:
    s_out = np.bincount(graph.edge_rows(), weights=graph.out_w, minlength=graph.n)
    s_in = np.bincount(graph.out_dst, weights=graph.out_w, minlength=graph.n)
    m_w = float(graph.out_w.sum())
    s_out.setflags(write=False)
    s_in.setflags(write=False)
    return Strengths(s_out, s_in, m_w)


def aggregate(graph: Graph, labels) -> Graph:
    """Collapse communities into super-nodes; intra weight becomes self-loops.

    Labels must be a dense relabeling 0..c-1 (use canonicalize_labels first).
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (graph.n,):
        raise ValueError("labels must cover every node exactly once")
    if graph.n == 0:
        return Graph.from_edges(0, labels, labels, np.empty(0))
    c = int(labels.max()) + 1
    if labels.min() < 0 or np.bincount(labels, minlength=c).min() == 0:
        raise ValueError("labels must be a dense relabeling 0..c-1")
    return Graph.from_edges(c, labels[graph.edge_rows()], labels[graph.out_dst],
                            graph.out_w)


def canonicalize_labels(labels) -> np.ndarray:
    """Dense labels 0..c-1 ordered by each community's smallest member."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        return labels.copy()
    uniq, first = np.unique(labels, return_index=True)
    remap = np.empty(uniq.size, dtype=np.int64)
    remap[np.argsort(first, kind="stable")] = np.arange(uniq.size)
    return remap[np.searchsorted(uniq, labels)]


def compose_labels(inner, outer) -> np.ndarray:
    """Flatten two stacked partitions: node -> inner community -> outer."""
    inner = np.asarray(inner, dtype=np.int64)
    outer = np.asarray(outer, dtype=np.int64)
    return outer[inner]


def write_partition(labels, path: str) -> None:
    labels = np.asarray(labels, dtype=np.int64)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(f"{i} {c}" for i, c in enumerate(labels)))
        handle.write("\n")


def read_partition(path: str) -> np.ndarray:
    nodes: list[int] = []
    comms: list[int] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(
                    f"line {lineno}: expected 'node community', got {line!r}")
            try:
                nodes.append(int(parts[0]))
                comms.append(int(parts[1]))
            except ValueError:
                raise GraphFormatError(f"line {lineno}: bad integer: {line!r}")
    labels = np.full(len(nodes), -1, dtype=np.int64)
    for lineno, (node, comm) in enumerate(zip(nodes, comms), start=1):
        if node < 0 or node >= len(nodes) or labels[node] != -1:
            raise GraphFormatError(
                f"partition file must list each node 0..n-1 exactly once "
                f"(offending node {node})")
        labels[node] = comm
    return labels
