"""ExpandWhenStuck percolation matching and the simplified ExpandOnce variant."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .engine import MarkTable, Matching, Percolator, Trace
from .graph import Graph
from .synth import make_rng

log = logging.getLogger(__name__)

Pair = tuple[int, int]


@dataclass
class EwsStats:
    steps: int = 0
    a_rounds: int = 0
    spreads: int = 0
    increments: int = 0
    cap_hits: int = 0
    epochs: int = 0


@dataclass
class EwsResult:
    matching: Matching
    marks: MarkTable
    stats: EwsStats = field(default_factory=EwsStats)
    trace: Trace | None = None
    epochs: list = field(default_factory=list)


def check_seed(g1: Graph, g2: Graph, seed: Sequence[Pair]) -> None:
    for u, v in seed:
        if not (0 <= u < g1.n and 0 <= v < g2.n):
            raise ValueError(f"seed pair [{u}, {v}] references a missing vertex")
    Matching(seed)  # raises on conflicting seed pairs


def artificial_seed(
    p: Percolator, active: list[Pair], cap: int
) -> tuple[list[Pair], bool]:
    """Free, unused neighboring pairs of matched pairs, best ``cap`` of them.

    ``active`` holds matched pairs that may still border free vertices on both
    sides; pairs that no longer do are dropped from it in place, since matched
    sets only grow.
    """
    adj1, adj2 = p.g1.adj, p.g2.adj
    fwd, bwd = p.matching.forward, p.matching.backward
    n2, z = p.n2, p.z
    keep: list[Pair] = []
    cand: set[int] = set()
    for u, v in active:
        fu = [a for a in adj1[u] if a not in fwd]
        if not fu:
            continue
        fv = [b for b in adj2[v] if b not in bwd]
        if not fv:
            continue
        keep.append((u, v))
        for a in fu:
            base = a * n2
            for b in fv:
                k = base + b
                if k not in z:
                    cand.add(k)
    active[:] = keep
    capped = len(cand) > cap
    if capped:
        chosen = heapq.nsmallest(cap, (p.priority(k, p.marks.get(k, 0)) for k in cand))
    else:
        chosen = sorted(p.priority(k, p.marks.get(k, 0)) for k in cand)
    return [divmod(prio % p.k2, n2) for prio in chosen], capped


def expand_when_stuck(
    g1: Graph,
    g2: Graph,
    seed: Sequence[Pair],
    a_cap: float = 2.0,
    trace: bool = False,
) -> EwsResult:
    """Seeded percolation matching that restarts from a noisy seed when stuck.

    Seed pairs are matched and spread first.  The best free pair with at least
    two marks is then matched and spread, repeatedly.  When none is left, every
    unused free neighboring pair of the matching is spread as an artificial
    seed (at most ``a_cap * |V1|`` of them, best first), and the loop resumes
    until no artificial seed can be formed.
    """
    check_seed(g1, g2, seed)
    tr = Trace(threshold=2) if trace else None
    p = Percolator(g1, g2, threshold=2, trace=tr)
    stats = EwsStats()
    for u, v in seed:
        p.add_seed(u, v)
    cap = max(1, int(a_cap * g1.n))
    active: list[Pair] = []
    seen = 0
    batch: list[Pair] = list(seed)
    while batch:
        stats.a_rounds += 1
        for u, v in batch:
            p.spread(u, v)
        stats.steps += p.percolate()
        log_ = p.matching.log
        active.extend(log_[seen:])
        seen = len(log_)
        batch, capped = artificial_seed(p, active, cap)
        stats.cap_hits += capped
    stats.spreads = len(p.z)
    stats.increments = p.increments
    log.debug("ews: %d pairs, %d rounds, %d increments", len(p.matching), stats.a_rounds, p.increments)
    return EwsResult(p.matching, p.marks, stats, tr)


class ExpandObserver(Protocol):
    def on_insert(self, u: int, v: int, step: int, p: Percolator) -> None: ...

    def on_spread(self, u: int, v: int, step: int) -> None: ...


def _eager_spread(p: Percolator, u: int, v: int, pending: list[Pair], obs, step: list[int]) -> None:
    n2 = p.n2
    key = u * n2 + v
    if key in p.z:
        return
    p.z.add(key)
    if p.trace is not None:
        p.trace.events.append(("spread", u, v))
    if obs is not None:
        obs.on_spread(u, v, step[0])
    marks = p.marks
    fwd, bwd = p.matching.forward, p.matching.backward
    thr = p.threshold
    nv = p.g2.adj[v]
    for a in p.g1.adj[u]:
        base = a * n2
        for b in nv:
            k = base + b
            marks[k] = c = marks.get(k, 0) + 1
            if c >= thr and a not in fwd and b not in bwd:
                p.insert(a, b, c)
                step[0] += 1
                pending.append((a, b))
                if obs is not None:
                    obs.on_insert(a, b, step[0], p)
    p.increments += len(p.g1.adj[u]) * len(nv)


def expand_once(
    g1: Graph,
    g2: Graph,
    seed: Sequence[Pair],
    rng_seed: int,
    trace: bool = False,
    observer: ExpandObserver | None = None,
) -> EwsResult:
    """Simplified percolation used for the repair-improvement experiments.

    The seed is the only spreading set formed up front; no artificial seed is
    generated later, so the run simply stops when no pair is left to spread.
    A pair is matched the moment it reaches two marks (if free), and the next
    spreader is drawn uniformly from matched pairs that have not spread yet.
    """
    check_seed(g1, g2, seed)
    rng = make_rng(rng_seed)
    tr = Trace(threshold=2, policy="threshold") if trace else None
    p = Percolator(g1, g2, threshold=2, trace=tr)
    stats = EwsStats(a_rounds=1)
    for u, v in seed:
        p.add_seed(u, v)
    pending: list[Pair] = []
    step = [0]
    for u, v in seed:
        _eager_spread(p, u, v, pending, observer, step)
    while pending:
        i = int(rng.integers(len(pending)))
        pending[i], pending[-1] = pending[-1], pending[i]
        u, v = pending.pop()
        _eager_spread(p, u, v, pending, observer, step)
    stats.steps = step[0]
    stats.spreads = len(p.z)
    stats.increments = p.increments
    return EwsResult(p.matching, p.marks, stats, tr)
