import pytest
from hypothesis import given

from irmatch.engine import Percolator, weight
from irmatch.graph import Graph
from irmatch.irma import IrmaConfig, irma, repairing_iteration
from irmatch.oracle import replay_check

from helpers import ba_instance, clique, er_instance, small_instances


def test_empty_previous_marks_is_one_percolation_round():
    inst = er_instance(n=300, deg=8, s=0.8, seed_size=15, rng=2)
    snap = repairing_iteration(inst.g1, inst.g2, inst.seed, {}, 2)
    p = Percolator(inst.g1, inst.g2)
    for u, v in inst.seed:
        p.add_seed(u, v)
    for u, v in inst.seed:
        p.spread(u, v)
    p.percolate()
    assert snap.matching == p.matching
    assert snap.marks == p.marks


def test_previous_mark_alone_qualifies():
    g = Graph(6, [(0, 1), (2, 3), (4, 5)])
    n2 = g.n
    prev = {4 * n2 + 5: 5}
    snap = repairing_iteration(g, g, [(0, 0)], prev, 2)
    assert (4, 5) in snap.matching
    assert snap.marks.get(4 * n2 + 5, 0) == 0


def test_clique_fixed_point(clique6):
    r = irma(clique6.g1, clique6.g2, clique6.seed, truth=clique6.truth)
    first = r[0].matching.forward
    assert all(s.matching.forward == first for s in r)
    assert r.final.metrics.f1 == 1.0


@pytest.mark.parametrize("thr", [0, 3])
def test_threshold_must_be_one_or_two(thr):
    g = clique(4)
    with pytest.raises(ValueError):
        repairing_iteration(g, g, [(0, 0)], {}, thr)


def test_config_validation():
    with pytest.raises(ValueError):
        IrmaConfig(delta=-0.1)
    with pytest.raises(ValueError):
        IrmaConfig(post_explore_iters=0)
    with pytest.raises(ValueError):
        IrmaConfig(max_iters=0)


def test_huge_delta_stops_after_one_repair():
    inst = er_instance(n=300, deg=8, s=0.7, seed_size=15, rng=5)
    r = irma(inst.g1, inst.g2, inst.seed, IrmaConfig(delta=10))
    assert len(r) == 2
    assert [s.phase for s in r] == ["ews", "repair"]


def test_stop_rule_exact():
    inst = ba_instance(n=600, m=4, s=0.6, seed_size=30, rng=1)
    cfg = IrmaConfig(delta=0.01)
    r = irma(inst.g1, inst.g2, inst.seed, cfg)
    w = [0] + [s.weight for s in r]
    end = r.phase1_end
    for i in range(1, end + 1):
        assert w[i] > (1 + cfg.delta) * w[i - 1]
    assert not w[end + 1] > (1 + cfg.delta) * w[end]
    assert r.final is r[r.phase1_best]
    assert r.final.weight == max(r[end].weight, r[end - 1].weight)


def test_truncation_flag():
    flags = []
    for rng in range(4):
        inst = ba_instance(n=400, m=3, s=0.6, seed_size=10, rng=rng)
        r = irma(inst.g1, inst.g2, inst.seed, IrmaConfig(delta=0.0, max_iters=1))
        assert len(r) <= 2
        flags.append(r.truncated)
        assert r.truncated == (len(r) == 2 and r[1].weight > r[0].weight)
    assert any(flags)


def test_exploration_schedule():
    inst = ba_instance(n=500, m=4, s=0.6, seed_size=20, rng=3)
    cfg = IrmaConfig(explore=True, post_explore_iters=4)
    r = irma(inst.g1, inst.g2, inst.seed, cfg, inst.truth)
    phases = [s.phase for s in r]
    assert phases[r.explore_index] == "explore"
    assert r[r.explore_index].threshold == 1
    assert phases[r.explore_index + 1 :] == ["post"] * 4
    assert r.final is r[-1]
    assert len(r) == r.phase1_end + 1 + 1 + 4


def test_only_latest_marks_kept():
    inst = ba_instance(n=400, m=4, s=0.6, seed_size=20, rng=2)
    r = irma(inst.g1, inst.g2, inst.seed, IrmaConfig(explore=True))
    assert r[-1].marks is not None
    assert all(s.marks is None for s in r.snapshots[:-1])


@given(small_instances())
def test_repair_traces_replay(inst):
    r = irma(inst.g1, inst.g2, inst.seed, IrmaConfig(explore=True, post_explore_iters=1), trace=True)
    for snap in r:
        assert replay_check(snap.trace, inst.g1, inst.g2).ok
        assert snap.weight == weight(inst.g1, inst.g2, snap.matching)
        assert set(inst.seed) <= set(snap.matching)


def test_rerun_is_identical():
    inst = er_instance(n=400, deg=8, s=0.7, seed_size=15, rng=8)
    a = irma(inst.g1, inst.g2, inst.seed, IrmaConfig(explore=True), inst.truth)
    b = irma(inst.g1, inst.g2, inst.seed, IrmaConfig(explore=True), inst.truth)
    assert [s.matching.log for s in a] == [s.matching.log for s in b]
    assert [s.metrics for s in a] == [s.metrics for s in b]
