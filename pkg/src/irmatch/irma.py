"""Iterative repair on top of percolation matching.

Every repairing iteration rebuilds the matching from the seed, ranking
candidates by ``max(current marks, final marks of the previous iteration)``.
Iterations continue while weight(M) grows by more than a factor ``1 + delta``.
An optional exploration iteration at threshold 1 is followed by a fixed number
of ordinary repairs.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .engine import MarkTable, Matching, Percolator, Trace, weight
from .ews import check_seed, expand_when_stuck
from .graph import Graph
from .metrics import MetricsReport, reachable_truth, score_matching

log = logging.getLogger(__name__)

Pair = tuple[int, int]

# the exploration iteration ranks by the same max-of-marks score, only the
# admission threshold changes
EXPLORE_THRESHOLD = 1
REPAIR_THRESHOLD = 2


@dataclass
class IrmaConfig:
    delta: float = 0.01
    explore: bool = False
    post_explore_iters: int = 4
    max_iters: int = 30
    a_cap: float = 2.0

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.post_explore_iters < 1:
            raise ValueError("post_explore_iters must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class IterationSnapshot:
    index: int
    phase: str  # "ews", "repair", "explore" or "post"
    threshold: int
    matching: Matching
    marks: MarkTable | None
    weight: int
    metrics: MetricsReport | None = None
    trace: Trace | None = None
    seconds: float = 0.0
    increments: int = 0


@dataclass
class IrmaRun:
    snapshots: list[IterationSnapshot] = field(default_factory=list)
    truncated: bool = False
    phase1_end: int = 0
    phase1_best: int = 0
    explore_index: int | None = None

    @property
    def final(self) -> IterationSnapshot:
        if self.explore_index is not None:
            return self.snapshots[-1]
        return self.snapshots[self.phase1_best]

    @property
    def pre_explore(self) -> IterationSnapshot:
        return self.snapshots[self.phase1_best]

    def __len__(self) -> int:
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    def __getitem__(self, i):
        return self.snapshots[i]


def repairing_iteration(
    g1: Graph,
    g2: Graph,
    seed: Sequence[Pair],
    prev_marks: Mapping[int, int],
    threshold: int = REPAIR_THRESHOLD,
    index: int = 1,
    trace: bool = False,
) -> IterationSnapshot:
    """Rebuild M from the seed using current marks and the previous final marks."""
    if threshold not in (1, 2):
        raise ValueError(f"threshold must be 1 or 2, got {threshold}")
    t0 = time.perf_counter()
    tr = Trace(threshold=threshold, prev=prev_marks or None) if trace else None
    p = Percolator(g1, g2, threshold=threshold, prev=prev_marks, trace=tr)
    for u, v in seed:
        p.add_seed(u, v)
    for u, v in seed:
        p.spread(u, v)
    p.queue_previous()
    p.percolate()
    phase = "repair" if threshold == REPAIR_THRESHOLD else "explore"
    return IterationSnapshot(
        index=index,
        phase=phase,
        threshold=threshold,
        matching=p.matching,
        marks=p.marks,
        weight=weight(g1, g2, p.matching),
        trace=tr,
        seconds=time.perf_counter() - t0,
        increments=p.increments,
    )


FirstFn = Callable[[], IterationSnapshot]
RepairFn = Callable[[MarkTable, int, int], IterationSnapshot]


def drive(
    first: FirstFn,
    repair: RepairFn,
    cfg: IrmaConfig,
    score: Callable[[Matching], MetricsReport] | None = None,
) -> IrmaRun:
    """Shared IRMA control loop for the sequential and epoch-parallel variants.

    ``repair(prev_marks, threshold, index)`` must return the next snapshot.
    """
    run = IrmaRun()
    snaps = run.snapshots

    def keep(s: IterationSnapshot) -> None:
        if score is not None:
            s.metrics = score(s.matching)
        # s was built from the previous table; only the newest one feeds the next iteration
        for old in snaps:
            old.marks = None
        snaps.append(s)
        log.info("iteration %d (%s): |M|=%d weight=%d", s.index, s.phase, len(s.matching), s.weight)

    keep(first())
    prev_weight = 0  # M_0 starts empty
    repairs = 0
    while snaps[-1].weight > (1 + cfg.delta) * prev_weight:
        if repairs >= cfg.max_iters:
            run.truncated = True
            break
        prev_weight = snaps[-1].weight
        repairs += 1
        keep(repair(snaps[-1].marks, REPAIR_THRESHOLD, len(snaps)))
    run.phase1_end = len(snaps) - 1
    run.phase1_best = run.phase1_end
    if len(snaps) >= 2 and snaps[-2].weight > snaps[-1].weight:
        run.phase1_best = run.phase1_end - 1

    if cfg.explore:
        s = repair(snaps[-1].marks, EXPLORE_THRESHOLD, len(snaps))
        s.phase = "explore"
        keep(s)
        run.explore_index = len(snaps) - 1
        for _ in range(cfg.post_explore_iters):
            s = repair(snaps[-1].marks, REPAIR_THRESHOLD, len(snaps))
            s.phase = "post"
            keep(s)
    return run


def make_scorer(g1: Graph, g2: Graph, truth: Mapping[int, int] | None):
    if truth is None:
        return None
    reach = reachable_truth(g1, g2, truth)
    return lambda m: score_matching(m, truth, g1, g2, reach)


def irma(
    g1: Graph,
    g2: Graph,
    seed: Sequence[Pair],
    cfg: IrmaConfig | None = None,
    truth: Mapping[int, int] | None = None,
    trace: bool = False,
) -> IrmaRun:
    """Run ExpandWhenStuck followed by repairing iterations."""
    cfg = cfg or IrmaConfig()
    check_seed(g1, g2, seed)
    seed = list(seed)

    def first() -> IterationSnapshot:
        t0 = time.perf_counter()
        r = expand_when_stuck(g1, g2, seed, a_cap=cfg.a_cap, trace=trace)
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
        return repairing_iteration(g1, g2, seed, prev, threshold, index, trace)

    return drive(first, repair, cfg, make_scorer(g1, g2, truth))
