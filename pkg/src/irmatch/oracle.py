"""Brute-force oracles and the statistical harness for repair improvement.

None of this is on the fast path.  The oracles are written to be obviously
correct on tiny inputs so the engine can be checked against them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import stats as sps

from .engine import Matching, Percolator, Trace, best_candidate
from .ews import expand_once
from .graph import Graph
from .synth import SamplingConfig, erdos_renyi, make_rng, pick_seed, sample_pair

BRUTE_FORCE_LIMIT = 8


def brute_force_best_bijection(g1: Graph, g2: Graph) -> tuple[dict[int, int], int]:
    """Exhaustive maximum of shared edges over injections of the smaller side.

    Returns ``(mapping g1 -> g2, shared_edges)``.  Among optimal mappings the
    lexicographically first permutation wins.
    """
    if max(g1.n, g2.n) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force is limited to {BRUTE_FORCE_LIMIT} vertices")
    flip = g1.n > g2.n
    a, b = (g2, g1) if flip else (g1, g2)
    adj_b = np.zeros((b.n, b.n), dtype=np.int64)
    for u, v in b.edges():
        adj_b[u, v] = adj_b[v, u] = 1
    perms = np.array(list(itertools.permutations(range(b.n), a.n)), dtype=np.int64).reshape(-1, a.n)
    shared = np.zeros(len(perms), dtype=np.int64)
    for u, v in a.edges():
        shared += adj_b[perms[:, u], perms[:, v]]
    best = int(np.argmax(shared))
    image = perms[best].tolist()
    if flip:
        mapping = {image[i]: i for i in range(a.n)}
    else:
        mapping = {i: image[i] for i in range(a.n)}
    return mapping, int(shared[best])


def brute_force_weight(g1: Graph, g2: Graph, mapping: Mapping[int, int]) -> int:
    """Shared edges by intersecting explicit edge sets."""
    e2 = {frozenset(e) for e in g2.edges()}
    return sum(
        1
        for u, v in g1.edges()
        if u in mapping and v in mapping and frozenset((mapping[u], mapping[v])) in e2
    )


@dataclass
class ReplayResult:
    ok: bool
    step: int = -1
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def replay_check(trace: Trace, g1: Graph, g2: Graph) -> ReplayResult:
    """Re-derive marks from the event log and audit every insertion.

    Uses dict bookkeeping and a full scan per insertion, no priority queue.
    Fails at the first event whose claim does not hold.
    """
    n2 = g2.n
    cur: dict[int, int] = {}
    used: set[int] = set()
    m = Matching()
    prev = trace.prev
    thr = trace.threshold
    for i, ev in enumerate(trace.events):
        if not isinstance(ev, tuple) or not ev:
            raise ValueError(f"malformed event at {i}: {ev!r}")
        kind = ev[0]
        if kind == "seed":
            _, u, v = ev
            if not m.is_free(u, v):
                return ReplayResult(False, i, "conflicting seed pair")
            m.add(u, v)
        elif kind == "spread":
            _, u, v = ev
            k = u * n2 + v
            if k in used:
                return ReplayResult(False, i, "pair spread twice")
            used.add(k)
            for a in g1.adj[u]:
                for b in g2.adj[v]:
                    kk = a * n2 + b
                    cur[kk] = cur.get(kk, 0) + 1
        elif kind == "insert":
            if len(ev) != 5:
                raise ValueError(f"malformed insert at {i}: {ev!r}")
            _, u, v, claimed, gap = ev
            if not m.is_free(u, v):
                return ReplayResult(False, i, "inserted pair conflicts")
            k = u * n2 + v
            mark = cur.get(k, 0)
            if prev is not None:
                mark = max(mark, prev.get(k, 0))
            if mark != claimed:
                return ReplayResult(False, i, f"claimed {claimed} marks, replay has {mark}")
            if mark < thr:
                return ReplayResult(False, i, "below threshold")
            if gap != abs(g1.deg[u] - g2.deg[v]):
                return ReplayResult(False, i, "wrong degree gap")
            if trace.policy == "argmax":
                best = best_candidate(g1, g2, cur, m, thr, prev)
                if best != (u, v):
                    return ReplayResult(False, i, f"argmax is {best}, not {(u, v)}")
            m.add(u, v)
        else:
            raise ValueError(f"unknown event kind {kind!r} at {i}")
    return ReplayResult(True)


@dataclass
class BlockRecord:
    """A wrong pair [u, v_wrong] inserted while the true pair [u, v_true] was free."""

    u: int
    v_true: int
    v_wrong: int
    step: int
    marks_true_t: int
    marks_wrong_t: int
    right_t: int
    wrong_t: int
    spreads_t: int
    marks_true_end: int = 0
    marks_wrong_end: int = 0
    right_end: int = 0
    wrong_end: int = 0

    @property
    def gain_true(self) -> int:
        return self.marks_true_end - self.marks_true_t

    @property
    def gain_wrong(self) -> int:
        return self.marks_wrong_end - self.marks_wrong_t

    @property
    def right_after(self) -> int:
        return self.right_end - self.right_t


class _BlockObserver:
    def __init__(self, g2: Graph, truth: Mapping[int, int]):
        self.n2 = g2.n
        self.truth = truth
        self.backward_truth = {v: u for u, v in truth.items()}
        self.spreaders: list[tuple[int, int, bool]] = []
        self.right = 0
        self.wrong = 0
        self.blocks: list[BlockRecord] = []

    def on_spread(self, u: int, v: int, step: int) -> None:
        ok = self.truth.get(u) == v
        self.spreaders.append((u, v, ok))
        if ok:
            self.right += 1
        else:
            self.wrong += 1

    def on_insert(self, u: int, v: int, step: int, p: Percolator) -> None:
        t = self.truth.get(u)
        if t is None or t == v or t in p.matching.backward:
            return
        n2 = self.n2
        self.blocks.append(
            BlockRecord(
                u=u,
                v_true=t,
                v_wrong=v,
                step=step,
                marks_true_t=p.marks.get(u * n2 + t, 0),
                marks_wrong_t=p.marks.get(u * n2 + v, 0),
                right_t=self.right,
                wrong_t=self.wrong,
                spreads_t=len(self.spreaders),
            )
        )


@dataclass
class GainSummary:
    n: int
    theta: float
    s: float
    runs: int
    seed_size: int
    blocks: int = 0
    eligible: int = 0
    mean_gain_true: float = math.nan
    mean_gain_wrong: float = math.nan
    favor_true_fraction: float = math.nan
    t_statistic: float = math.nan
    p_value: float = math.nan
    freq_right_marks_true: float = math.nan
    freq_right_marks_wrong: float = math.nan
    trials_right: int = 0
    expected_true: float = 0.0
    expected_wrong: float = 0.0
    z_true: float = math.nan
    z_wrong: float = math.nan
    sign_check_fraction: float = math.nan
    wrong_insertions_per_run: float = 0.0
    inconclusive: bool = True
    per_run: list[dict] = field(default_factory=list)

    def direction_holds(self, alpha: float = 0.05) -> bool:
        return not self.inconclusive and self.mean_gain_true > self.mean_gain_wrong and self.p_value < alpha

    def frequencies_match(self, sigmas: float = 3.0) -> bool:
        return abs(self.z_true) <= sigmas and abs(self.z_wrong) <= sigmas


def repair_gain_experiment(
    n: int,
    theta: float,
    s: float,
    runs: int,
    rng_seed: int,
    seed_size: int = 25,
) -> GainSummary:
    """Measure post-block mark gains of blocked true pairs and their blockers.

    Each run samples G(n, theta, s), runs ExpandOnce from a uniform seed and
    records every wrong insertion [u, v'] made while the true pair [u, v] was
    still free.  Only blocks followed by at least one correct spreader enter
    the statistics.  Per-spreader frequencies count, over correct spreaders
    after the block, how often the spreader neighbors [u, v] and [u, v'].
    """
    out = GainSummary(n, theta, s, runs, seed_size, expected_true=s * s * theta, expected_wrong=s * s * theta * theta)
    master = make_rng(rng_seed)
    diffs: list[int] = []
    gains_t: list[int] = []
    gains_w: list[int] = []
    hits_true = hits_wrong = trials = 0
    sign_ok = sign_total = 0
    wrong_inserts = 0
    for r in range(runs):
        gseed, sseed, pseed, eseed = (int(x) for x in master.integers(0, 2**62, size=4))
        src = erdos_renyi(n, theta, gseed)
        inst = sample_pair(src, SamplingConfig(s, rng_seed=sseed))
        size = min(seed_size, len(inst.truth))
        seed = pick_seed(inst, size, pseed)
        obs = _BlockObserver(inst.g2, inst.truth)
        res = expand_once(inst.g1, inst.g2, seed, eseed, observer=obs)
        n2 = inst.g2.n
        wrong_inserts += sum(1 for u, v in res.matching.forward.items() if inst.truth.get(u) != v)
        adj1 = [set(a) for a in inst.g1.adj]
        adj2 = [set(a) for a in inst.g2.adj]
        run_blocks = 0
        for b in obs.blocks:
            b.marks_true_end = res.marks.get(b.u * n2 + b.v_true, 0)
            b.marks_wrong_end = res.marks.get(b.u * n2 + b.v_wrong, 0)
            b.right_end = obs.right
            b.wrong_end = obs.wrong
            out.blocks += 1
            if b.right_after < 1:
                continue
            run_blocks += 1
            diffs.append(b.gain_true - b.gain_wrong)
            gains_t.append(b.gain_true)
            gains_w.append(b.gain_wrong)
            sign_total += 1
            if b.right_after * s * s * theta * (1 - theta) - s * s * theta * theta > 0:
                sign_ok += 1
            nu = adj1[b.u]
            nt, nw = adj2[b.v_true], adj2[b.v_wrong]
            for alpha, beta, ok in obs.spreaders[b.spreads_t :]:
                if not ok or alpha == b.u:
                    continue
                trials += 1
                if alpha in nu:
                    hits_true += beta in nt
                    hits_wrong += beta in nw
        out.per_run.append({"run": r, "blocks": len(obs.blocks), "eligible": run_blocks, "matched": len(res.matching)})
    out.eligible = len(diffs)
    out.wrong_insertions_per_run = wrong_inserts / runs if runs else 0.0
    if len(diffs) >= 2:
        out.inconclusive = False
        out.mean_gain_true = float(np.mean(gains_t))
        out.mean_gain_wrong = float(np.mean(gains_w))
        out.favor_true_fraction = float(np.mean(np.array(diffs) > 0))
        if np.std(diffs) > 0:
            test = sps.ttest_1samp(diffs, 0.0, alternative="greater")
            out.t_statistic = float(test.statistic)
            out.p_value = float(test.pvalue)
        else:
            out.p_value = 0.0 if np.mean(diffs) > 0 else 1.0
    if trials:
        out.trials_right = trials
        out.freq_right_marks_true = hits_true / trials
        out.freq_right_marks_wrong = hits_wrong / trials
        for attr, hits, q in (("z_true", hits_true, out.expected_true), ("z_wrong", hits_wrong, out.expected_wrong)):
            sd = math.sqrt(q * (1 - q) / trials)
            setattr(out, attr, (hits / trials - q) / sd if sd > 0 else math.inf)
    if sign_total:
        out.sign_check_fraction = sign_ok / sign_total
    return out
