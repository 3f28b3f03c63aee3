"""Epoch-parallel ExpandWhenStuck and repairing iterations.

An epoch admits every qualifying free candidate, best first, without spreading
any marks; then all newly admitted pairs spread at once.  The spread is a map
over worker chunks that each build a private table of increments, followed by
a reduction in ascending pair-key order.  Integer addition commutes, so the
resulting mark table and matching do not depend on the number of workers.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .engine import MarkTable, Percolator, Trace, weight
from .ews import EwsResult, EwsStats, artificial_seed, check_seed
from .graph import Graph
from .irma import (
    REPAIR_THRESHOLD,
    IrmaConfig,
    IrmaRun,
    IterationSnapshot,
    drive,
    make_scorer,
)

Pair = tuple[int, int]


@dataclass
class Epoch:
    index: int
    matched: list[Pair] = field(default_factory=list)
    spread_pairs: int = 0
    touched: int = 0


def _local_increments(g1: Graph, g2: Graph, pairs: Sequence[Pair]) -> tuple[np.ndarray, np.ndarray]:
    ip1, ix1 = g1.csr()
    ip2, ix2 = g2.csr()
    n2 = g2.n
    parts = []
    for u, v in pairs:
        a = ix1[ip1[u] : ip1[u + 1]]
        b = ix2[ip2[v] : ip2[v + 1]]
        if len(a) and len(b):
            parts.append((a[:, None] * n2 + b[None, :]).ravel())
    if not parts:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    return np.unique(np.concatenate(parts), return_counts=True)


def _chunks(items: Sequence[Pair], k: int) -> list[Sequence[Pair]]:
    k = max(1, min(k, len(items)))
    size, extra = divmod(len(items), k)
    out, start = [], 0
    for i in range(k):
        stop = start + size + (i < extra)
        out.append(items[start:stop])
        start = stop
    return out


def bulk_spread(p: Percolator, pairs: Iterable[Pair], workers: int = 1) -> list[int]:
    """Spread from all ``pairs`` simultaneously; return keys that now qualify.

    Pairs already in the spread log are skipped.  Returned keys have a mark of
    at least the percolator threshold, in ascending key order, and are free.
    """
    n2 = p.n2
    todo = []
    for u, v in pairs:
        k = u * n2 + v
        if k in p.z:
            continue
        p.z.add(k)
        todo.append((u, v))
        if p.trace is not None:
            p.trace.events.append(("spread", u, v))
    if not todo:
        return []
    chunks = _chunks(todo, workers)
    if len(chunks) == 1:
        partial = [_local_increments(p.g1, p.g2, chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            partial = list(pool.map(lambda c: _local_increments(p.g1, p.g2, c), chunks))
    keys = np.concatenate([k for k, _ in partial])
    counts = np.concatenate([c for _, c in partial])
    uniq, inv = np.unique(keys, return_inverse=True)
    totals = np.bincount(inv, weights=counts, minlength=len(uniq)).astype(np.int64)

    marks = p.marks
    get = marks.get
    prev = p.prev
    thr = p.threshold
    fwd, bwd = p.matching.forward, p.matching.backward
    ready = []
    for k, c in zip(uniq.tolist(), totals.tolist()):
        marks[k] = c = get(k, 0) + c
        if c >= thr:
            u, v = divmod(k, n2)
            if u not in fwd and v not in bwd and (prev is None or c > prev.get(k, 0)):
                ready.append(k)
    d1, d2 = p.g1.deg, p.g2.deg
    p.increments += sum(d1[u] * d2[v] for u, v in todo)
    return ready


def admit(p: Percolator, keys: Iterable[int]) -> list[Pair]:
    """Greedily admit free candidates in score order, with no spreading."""
    order = sorted(p.priority(k, p.mark_of(k)) for k in keys)
    fwd, bwd = p.matching.forward, p.matching.backward
    n2, k1, k2 = p.n2, p.k1, p.k2
    out = []
    for prio in order:
        u, v = divmod(prio % k2, n2)
        if u in fwd or v in bwd:
            continue
        p.insert(u, v, -(prio // k1))
        out.append((u, v))
    return out


def parallel_ews(
    g1: Graph,
    g2: Graph,
    seed: Sequence[Pair],
    workers: int = 1,
    a_cap: float = 2.0,
    trace: bool = False,
) -> EwsResult:
    """Epoch version of ExpandWhenStuck.

    When an epoch admits nothing, an artificial seed is formed exactly as in
    the sequential algorithm and spread as one more bulk step.
    """
    check_seed(g1, g2, seed)
    tr = Trace(threshold=2) if trace else None
    p = Percolator(g1, g2, threshold=2, trace=tr)
    stats = EwsStats()
    for u, v in seed:
        p.add_seed(u, v)
    cap = max(1, int(a_cap * g1.n))
    epochs: list[Epoch] = []
    active: list[Pair] = []
    seen = 0
    batch: list[Pair] = list(seed)
    stats.a_rounds = 1
    while True:
        ready = bulk_spread(p, batch, workers)
        admitted = admit(p, ready)
        epochs.append(Epoch(len(epochs), admitted, len(batch), len(ready)))
        stats.steps += len(admitted)
        if admitted:
            batch = admitted
            continue
        log_ = p.matching.log
        active.extend(log_[seen:])
        seen = len(log_)
        batch, capped = artificial_seed(p, active, cap)
        stats.cap_hits += capped
        if not batch:
            break
        stats.a_rounds += 1
    stats.epochs = len(epochs)
    stats.spreads = len(p.z)
    stats.increments = p.increments
    return EwsResult(p.matching, p.marks, stats, tr, epochs)


def parallel_repairing_iteration(
    g1: Graph,
    g2: Graph,
    seed: Sequence[Pair],
    prev_marks: Mapping[int, int],
    threshold: int = REPAIR_THRESHOLD,
    workers: int = 1,
    index: int = 1,
    trace: bool = False,
) -> IterationSnapshot:
    """Admit from the previous queue only, then spread from all of M at once."""
    if threshold not in (1, 2):
        raise ValueError(f"threshold must be 1 or 2, got {threshold}")
    t0 = time.perf_counter()
    tr = Trace(threshold=threshold, prev=prev_marks or None) if trace else None
    p = Percolator(g1, g2, threshold=threshold, prev=prev_marks, trace=tr)
    for u, v in seed:
        p.add_seed(u, v)
    admit(p, [k for k, c in prev_marks.items() if c >= threshold])
    bulk_spread(p, list(p.matching.log), workers)
    return IterationSnapshot(
        index=index,
        phase="repair" if threshold == REPAIR_THRESHOLD else "explore",
        threshold=threshold,
        matching=p.matching,
        marks=p.marks,
        weight=weight(g1, g2, p.matching),
        trace=tr,
        seconds=time.perf_counter() - t0,
        increments=p.increments,
    )


def parallel_irma(
    g1: Graph,
    g2: Graph,
    seed: Sequence[Pair],
    cfg: IrmaConfig | None = None,
    truth: Mapping[int, int] | None = None,
    workers: int = 1,
    trace: bool = False,
) -> IrmaRun:
    """Parallel EWS followed by parallel repairing iterations, same stop rules."""
    cfg = cfg or IrmaConfig()
    check_seed(g1, g2, seed)
    seed = list(seed)

    def first() -> IterationSnapshot:
        t0 = time.perf_counter()
        r = parallel_ews(g1, g2, seed, workers, cfg.a_cap, trace)
        return IterationSnapshot(
            index=0,
            phase="ews",
            threshold=REPAIR_THRESHOLD,
            matching=r.matching,
            marks=r.marks,
            weight=weight(g1, g2, r.matching),
            trace=r.trace,
            seconds=time.perf_counter() - t0,
            increments=r.stats.increments,
        )

    def repair(prev: MarkTable, threshold: int, index: int) -> IterationSnapshot:
        return parallel_repairing_iteration(g1, g2, seed, prev, threshold, workers, index, trace)

    return drive(first, repair, cfg, make_scorer(g1, g2, truth))
