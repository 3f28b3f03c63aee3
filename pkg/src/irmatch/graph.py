"""Undirected simple graphs with dense integer vertex ids.

Vertices are re-indexed to ``0..n-1`` at construction time; the original
labels are kept so results can be written back in the caller's vocabulary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


@dataclass
class LoadStats:
    """Counts of input noise dropped while building a graph."""

    raw_edges: int = 0
    self_loops: int = 0
    duplicates: int = 0


class Graph:
    """Immutable undirected simple graph.

    ``adj[v]`` is the sorted tuple of neighbors of ``v``.  ``labels[v]`` is the
    original label of dense id ``v``.
    """

    __slots__ = ("n", "adj", "deg", "labels", "_index", "_adjset", "_csr", "stats")

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int]],
        labels: Sequence[Hashable] | None = None,
        stats: LoadStats | None = None,
    ):
        if n < 0:
            raise GraphError("negative vertex count")
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for {n} vertices")
            if u == v:
                continue
            nbrs[u].add(v)
            nbrs[v].add(u)
        self.n = n
        self.adj: tuple[tuple[int, ...], ...] = tuple(tuple(sorted(s)) for s in nbrs)
        self.deg: tuple[int, ...] = tuple(len(a) for a in self.adj)
        self.labels: tuple[Hashable, ...] = tuple(labels) if labels is not None else tuple(range(n))
        if len(self.labels) != n:
            raise GraphError("label count does not match vertex count")
        self._index: dict[Hashable, int] | None = None
        self._adjset: list[frozenset[int]] | None = None
        self._csr: tuple[np.ndarray, np.ndarray] | None = None
        self.stats = stats or LoadStats()

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.edge_count})"

    @property
    def edge_count(self) -> int:
        return sum(self.deg) // 2

    def neighbors(self, v: int) -> tuple[int, ...]:
        if not 0 <= v < self.n:
            raise GraphError(f"vertex {v} out of range")
        return self.adj[v]

    def degree(self, v: int) -> int:
        if not 0 <= v < self.n:
            raise GraphError(f"vertex {v} out of range")
        return self.deg[v]

    def has_edge(self, u: int, v: int) -> bool:
        if self._adjset is None:
            self._adjset = [frozenset(a) for a in self.adj]
        return v in self._adjset[u]

    def edges(self) -> Iterable[tuple[int, int]]:
        """Each undirected edge once, as ``(u, v)`` with ``u < v``."""
        for u, nb in enumerate(self.adj):
            for v in nb:
                if u < v:
                    yield u, v

    def index_of(self, label: Hashable) -> int:
        if self._index is None:
            self._index = {lab: i for i, lab in enumerate(self.labels)}
        return self._index[label]

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """``(indptr, indices)`` view of the adjacency, built once."""
        if self._csr is None:
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(self.deg, out=indptr[1:])
            indices = np.fromiter(
                (w for nb in self.adj for w in nb), dtype=np.int64, count=int(indptr[-1])
            )
            self._csr = (indptr, indices)
        return self._csr

    def max_degree(self) -> int:
        return max(self.deg, default=0)


def build_graph(edges: Iterable[tuple[Hashable, Hashable]]) -> Graph:
    """Build a graph from labelled edges.

    Self-loops and repeated edges are dropped and counted in ``graph.stats``.
    Labels are numbered in order of first appearance.
    """
    index: dict[Hashable, int] = {}
    labels: list[Hashable] = []
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    stats = LoadStats()
    for a, b in edges:
        stats.raw_edges += 1
        for lab in (a, b):
            if lab not in index:
                index[lab] = len(labels)
                labels.append(lab)
        u, v = index[a], index[b]
        if u == v:
            stats.self_loops += 1
            continue
        key = (u, v) if u < v else (v, u)
        if key in seen:
            stats.duplicates += 1
            continue
        seen.add(key)
        pairs.append(key)
    if stats.raw_edges == 0:
        raise GraphError("empty graph")
    return Graph(len(labels), pairs, labels, stats)


def read_edge_list(path: str | Path) -> Graph:
    """Parse a whitespace separated edge list (SNAP / network-repository style).

    Lines starting with ``#`` or ``%`` are comments.  Extra columns (weights,
    timestamps) are ignored.
    """
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line[0] in "#%":
                continue
            parts = line.split()
            if len(parts) < 2:
                raise GraphError(f"{path}:{lineno}: expected two tokens")
            edges.append((parts[0], parts[1]))
    return build_graph(edges)


def write_edge_list(g: Graph, path: str | Path) -> None:
    with open(path, "w") as fh:
        for u, v in g.edges():
            fh.write(f"{g.labels[u]} {g.labels[v]}\n")
