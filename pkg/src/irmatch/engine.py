"""Percolation machinery shared by every matcher.

A candidate pair ``[u, v]`` is stored as the integer ``u * n2 + v`` where ``n2``
is the vertex count of the second graph.  Mark tables are plain dicts from that
key to a positive count.

Candidates are ranked lexicographically: more marks first, then a smaller
degree gap ``|d1(u) - d2(v)|``, then the smaller pair key.  This is the
"marks minus an infinitesimal times the degree gap" score without a float.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple

from .graph import Graph

MarkTable = dict  # pair key -> mark count


class ConflictError(ValueError):
    pass


def pair_key(u: int, v: int, n2: int) -> int:
    return u * n2 + v


def unpack(key: int, n2: int) -> tuple[int, int]:
    return divmod(key, n2)


class ScoreKey(NamedTuple):
    marks: int
    degree_gap: int
    tie_key: int

    def order(self) -> tuple[int, int, int]:
        """Ascending sort key; the best candidate sorts first."""
        return (-self.marks, self.degree_gap, self.tie_key)

    def eps_score(self, eps: float) -> float:
        return self.marks - eps * self.degree_gap


def score_key(g1: Graph, g2: Graph, u: int, v: int, marks: int) -> ScoreKey:
    return ScoreKey(marks, abs(g1.deg[u] - g2.deg[v]), u * g2.n + v)


class Matching:
    """Conflict-free partial bijection between V1 and V2."""

    __slots__ = ("forward", "backward", "log")

    def __init__(self, pairs: Iterable[tuple[int, int]] = ()):
        self.forward: dict[int, int] = {}
        self.backward: dict[int, int] = {}
        self.log: list[tuple[int, int]] = []
        for u, v in pairs:
            self.add(u, v)

    def conflicts(self, u: int, v: int) -> bool:
        """True if ``[u, v]`` shares exactly one endpoint with a matched pair."""
        fu = self.forward.get(u)
        bv = self.backward.get(v)
        if fu is None and bv is None:
            return False
        return fu != v or bv != u

    def is_free(self, u: int, v: int) -> bool:
        return u not in self.forward and v not in self.backward

    def add(self, u: int, v: int) -> None:
        if u in self.forward or v in self.backward:
            raise ConflictError(f"pair [{u}, {v}] conflicts with the matching")
        self.forward[u] = v
        self.backward[v] = u
        self.log.append((u, v))

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return self.forward.get(pair[0], -1) == pair[1]

    def __len__(self) -> int:
        return len(self.log)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.log)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Matching) and self.log == other.log

    def __repr__(self) -> str:
        return f"Matching({len(self)} pairs)"

    def copy(self) -> "Matching":
        m = Matching()
        m.forward = dict(self.forward)
        m.backward = dict(self.backward)
        m.log = list(self.log)
        return m


def weight(g1: Graph, g2: Graph, m: Matching) -> int:
    """Number of g1 edges whose matched images form a g2 edge."""
    fwd = m.forward
    adj1 = g1.adj
    total = 0
    for u, v in fwd.items():
        for w in adj1[u]:
            if w > u:
                x = fwd.get(w)
                if x is not None and g2.has_edge(v, x):
                    total += 1
    return total


def spread_marks(
    g1: Graph, g2: Graph, u: int, v: int, table: MarkTable, z: set[int]
) -> bool:
    """Add one mark to every neighboring pair of ``[u, v]``.

    Returns False (and leaves ``table`` alone) if ``[u, v]`` already spread.
    """
    n2 = g2.n
    key = u * n2 + v
    if key in z:
        return False
    z.add(key)
    nv = g2.adj[v]
    for a in g1.adj[u]:
        base = a * n2
        for b in nv:
            k = base + b
            table[k] = table.get(k, 0) + 1
    return True


def best_candidate(
    g1: Graph,
    g2: Graph,
    table: Mapping[int, int],
    m: Matching,
    threshold: int,
    prev: Mapping[int, int] | None = None,
) -> tuple[int, int] | None:
    """Best pair with at least ``threshold`` marks that is free in ``m``.

    With ``prev`` the mark of a pair is ``max(table[p], prev[p])``.  This is a
    full scan; the engine's queue must agree with it.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    n2 = g2.n
    keys: Iterable[int] = table.keys() if prev is None else set(table) | set(prev)
    best = None
    best_order = None
    for k in keys:
        c = table.get(k, 0)
        if prev is not None:
            c = max(c, prev.get(k, 0))
        if c < threshold:
            continue
        u, v = divmod(k, n2)
        if not m.is_free(u, v):
            continue
        order = (-c, abs(g1.deg[u] - g2.deg[v]), k)
        if best_order is None or order < best_order:
            best_order = order
            best = (u, v)
    return best


@dataclass
class Trace:
    """Replayable log of one percolation run.

    ``events`` holds ``("seed", u, v)``, ``("spread", u, v)`` and
    ``("insert", u, v, marks, gap)`` tuples in execution order.  ``policy`` is
    ``"argmax"`` when every insert claims to be the best free candidate and
    ``"threshold"`` when inserts only claim to clear the threshold.
    """

    threshold: int
    policy: str = "argmax"
    prev: Mapping[int, int] | None = None
    events: list[tuple] = field(default_factory=list)

    def inserts(self) -> list[tuple]:
        return [e for e in self.events if e[0] == "insert"]

    def to_tsv(self, path: str | Path, truth: Mapping[int, int] | None = None) -> None:
        with open(path, "w") as fh:
            fh.write("step\tpair\tmarks\tdegree_gap\tcorrect\n")
            for step, (_, u, v, marks, gap) in enumerate(self.inserts()):
                ok = "" if truth is None else str(int(truth.get(u) == v))
                fh.write(f"{step}\t{u},{v}\t{marks}\t{gap}\t{ok}\n")


class Percolator:
    """Mark table, matching, spread log and lazy max-heap for one iteration.

    ``prev`` (optional) is the final mark table of the previous iteration; the
    effective mark of a pair is then ``max(marks[p], prev[p])``.  Heap entries
    are single ints encoding ``(-mark, gap, key)``; an entry is stale when its
    mark is below the pair's current mark or the pair is no longer free.
    """

    def __init__(
        self,
        g1: Graph,
        g2: Graph,
        threshold: int = 2,
        prev: Mapping[int, int] | None = None,
        trace: Trace | None = None,
    ):
        if threshold < 1:
            raise ValueError("threshold must be >= 1")
        self.g1, self.g2 = g1, g2
        self.n2 = max(g2.n, 1)
        self.threshold = threshold
        self.prev = prev or None
        self.marks: MarkTable = {}
        self.matching = Matching()
        self.z: set[int] = set()
        self.heap: list[int] = []
        self.increments = 0
        self.trace = trace
        self.k2 = max(g1.n, 1) * self.n2
        self.k1 = self.k2 * (max(g1.max_degree(), g2.max_degree()) + 1)

    def priority(self, key: int, mark: int) -> int:
        u, v = divmod(key, self.n2)
        return -mark * self.k1 + abs(self.g1.deg[u] - self.g2.deg[v]) * self.k2 + key

    def mark_of(self, key: int) -> int:
        c = self.marks.get(key, 0)
        if self.prev is not None:
            c = max(c, self.prev.get(key, 0))
        return c

    def add_seed(self, u: int, v: int) -> None:
        self.matching.add(u, v)
        if self.trace is not None:
            self.trace.events.append(("seed", u, v))

    def insert(self, u: int, v: int, mark: int) -> None:
        self.matching.add(u, v)
        if self.trace is not None:
            gap = abs(self.g1.deg[u] - self.g2.deg[v])
            self.trace.events.append(("insert", u, v, mark, gap))

    def spread(self, u: int, v: int) -> bool:
        """Spread from ``[u, v]`` once; queue neighbors that newly qualify."""
        n2 = self.n2
        key = u * n2 + v
        z = self.z
        if key in z:
            return False
        z.add(key)
        if self.trace is not None:
            self.trace.events.append(("spread", u, v))
        marks = self.marks
        get = marks.get
        fwd = self.matching.forward
        bwd = self.matching.backward
        heap = self.heap
        push = heapq.heappush
        thr = self.threshold
        prev = self.prev
        d1, d2 = self.g1.deg, self.g2.deg
        k1, k2 = self.k1, self.k2
        nv = self.g2.adj[v]
        for a in self.g1.adj[u]:
            base = a * n2
            if a in fwd:
                for b in nv:
                    k = base + b
                    marks[k] = get(k, 0) + 1
                continue
            for b in nv:
                k = base + b
                marks[k] = c = get(k, 0) + 1
                if c >= thr and b not in bwd:
                    if prev is not None and c <= prev.get(k, 0):
                        continue
                    gap = d1[a] - d2[b]
                    push(heap, -c * k1 + (gap if gap >= 0 else -gap) * k2 + k)
        self.increments += len(self.g1.adj[u]) * len(nv)
        return True

    def queue_previous(self) -> None:
        """Queue every free pair whose previous-iteration mark clears the threshold."""
        if self.prev is None:
            return
        thr = self.threshold
        n2 = self.n2
        fwd, bwd = self.matching.forward, self.matching.backward
        entries = []
        for k, c in self.prev.items():
            if c < thr:
                continue
            u, v = divmod(k, n2)
            if u in fwd or v in bwd:
                continue
            entries.append(self.priority(k, max(c, self.marks.get(k, 0))))
        self.heap.extend(entries)
        heapq.heapify(self.heap)

    def pop_best(self) -> tuple[int, int, int] | None:
        """Pop the best free pair with at least ``threshold`` marks, or None."""
        heap = self.heap
        fwd, bwd = self.matching.forward, self.matching.backward
        n2, k1, k2 = self.n2, self.k1, self.k2
        while heap:
            prio = heapq.heappop(heap)
            key = prio % k2
            u, v = divmod(key, n2)
            if u in fwd or v in bwd:
                continue
            mark = -(prio // k1)
            if mark != self.mark_of(key):
                continue
            return u, v, mark
        return None

    def percolate(self) -> int:
        """Greedy loop: insert the best candidate and spread from it until none remain."""
        steps = 0
        while True:
            best = self.pop_best()
            if best is None:
                return steps
            u, v, mark = best
            self.insert(u, v, mark)
            self.spread(u, v)
            steps += 1
