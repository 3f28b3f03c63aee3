import itertools

import pytest
from hypothesis import given

from irmatch.engine import Matching, Trace, weight
from irmatch.ews import expand_when_stuck
from irmatch.graph import Graph
from irmatch.oracle import (
    brute_force_best_bijection,
    brute_force_weight,
    replay_check,
    repair_gain_experiment,
)

from helpers import clique, graphs, path


def test_triangle_on_triangle():
    _, shared = brute_force_best_bijection(clique(3), clique(3))
    assert shared == 3


def test_path_into_triangle():
    mapping, shared = brute_force_best_bijection(path(3), clique(3))
    assert shared == 2
    assert brute_force_weight(path(3), clique(3), mapping) == 2


def test_unequal_sides():
    mapping, shared = brute_force_best_bijection(clique(4), path(3))
    assert shared == 2
    assert len(mapping) == 3


@given(graphs(min_n=1, max_n=6), graphs(min_n=1, max_n=6))
def test_oracle_agrees_with_weight(g1, g2):
    mapping, shared = brute_force_best_bijection(g1, g2)
    assert weight(g1, g2, Matching(mapping.items())) == shared
    assert brute_force_weight(g1, g2, mapping) == shared
    # no injection does better
    small, big = (g1, g2) if g1.n <= g2.n else (g2, g1)
    for img in itertools.islice(itertools.permutations(range(big.n), small.n), 200):
        assert brute_force_weight(small, big, dict(enumerate(img))) <= shared


def test_size_limit():
    with pytest.raises(ValueError):
        brute_force_best_bijection(clique(9), clique(3))


def test_replay_passes_on_clique(clique6):
    r = expand_when_stuck(clique6.g1, clique6.g2, clique6.seed, trace=True)
    assert replay_check(r.trace, clique6.g1, clique6.g2)


def test_replay_detects_tampered_mark(clique6):
    r = expand_when_stuck(clique6.g1, clique6.g2, clique6.seed, trace=True)
    ev = r.trace.events
    i = next(k for k, e in enumerate(ev) if e[0] == "insert")
    _, u, v, marks, gap = ev[i]
    ev[i] = ("insert", u, v, marks + 1, gap)
    res = replay_check(r.trace, clique6.g1, clique6.g2)
    assert not res.ok and res.step == i


def test_replay_detects_wrong_choice(clique6):
    g = clique6.g1
    tr = Trace(threshold=2)
    tr.events = [("seed", 0, 0), ("seed", 1, 1), ("spread", 0, 0), ("spread", 1, 1), ("insert", 2, 3, 2, 0)]
    res = replay_check(tr, g, g)
    assert not res.ok and "argmax" in res.reason
    tr.policy = "threshold"
    assert replay_check(tr, g, g).ok


def test_replay_detects_double_spread():
    g = clique(4)
    tr = Trace(threshold=2)
    tr.events = [("seed", 0, 0), ("spread", 0, 0), ("spread", 0, 0)]
    assert not replay_check(tr, g, g).ok


@pytest.mark.parametrize("bad", [("insert", 1, 1), ("warp", 0, 0), ()])
def test_replay_rejects_malformed(bad):
    g = clique(3)
    tr = Trace(threshold=2, events=[bad])
    with pytest.raises(ValueError):
        replay_check(tr, g, g)


def test_full_overlap_control_is_nearly_clean():
    full = repair_gain_experiment(n=500, theta=0.02, s=1.0, runs=3, rng_seed=1)
    noisy = repair_gain_experiment(n=500, theta=0.02, s=0.7, runs=3, rng_seed=1)
    # eager insertion still admits the odd pair with two shared matched neighbours
    assert full.wrong_insertions_per_run < 0.05 * 500
    assert all(r["matched"] >= 490 for r in full.per_run)
    frac = lambda o: o.wrong_insertions_per_run / (sum(r["matched"] for r in o.per_run) / o.runs)
    assert frac(noisy) > 2 * frac(full)


def test_no_blocks_is_inconclusive():
    out = repair_gain_experiment(n=60, theta=0.01, s=0.5, runs=2, rng_seed=3, seed_size=2)
    assert out.eligible < 2 and out.inconclusive
    assert not out.direction_holds()


def test_insert_below_threshold_fails_replay():
    g = Graph(3, [])
    assert not replay_check(Trace(threshold=2, events=[("seed", 0, 0), ("insert", 1, 1, 0, 0)]), g, g).ok
