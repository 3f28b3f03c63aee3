"""Shared graph and instance builders for the test suite."""

import itertools

from hypothesis import strategies as st

from irmatch.graph import Graph
from irmatch.synth import Instance, SamplingConfig, barabasi_albert, erdos_renyi, pick_seed, sample_pair

def clique(n: int) -> Graph:
    return Graph(n, itertools.combinations(range(n), 2))


def path(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def identity_instance(g: Graph, seed=()) -> Instance:
    return Instance(g, g, {v: v for v in range(g.n)}, list(seed), {})


def er_instance(n=300, deg=8.0, s=0.8, seed_size=20, rng=0) -> Instance:
    src = erdos_renyi(n, deg / (n - 1), rng)
    inst = sample_pair(src, SamplingConfig(s, rng + 1))
    return inst.with_seed(pick_seed(inst, min(seed_size, len(inst.truth)), rng + 2))


def ba_instance(n=300, m=4, s=0.7, seed_size=20, rng=0) -> Instance:
    src = barabasi_albert(n, m, rng)
    inst = sample_pair(src, SamplingConfig(s, rng + 1))
    return inst.with_seed(pick_seed(inst, min(seed_size, len(inst.truth)), rng + 2))


@st.composite
def graphs(draw, min_n=1, max_n=8, p=None):
    n = draw(st.integers(min_n, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph(n, [e for e, keep in zip(pairs, mask) if keep])


@st.composite
def small_instances(draw, max_n=12):
    """Sampled pair of a random small source graph, with a nonempty seed."""
    n = draw(st.integers(4, max_n))
    rng = draw(st.integers(0, 2**32))
    s = draw(st.sampled_from([0.7, 0.85, 1.0]))
    src = erdos_renyi(n, draw(st.sampled_from([0.3, 0.5, 0.8])), rng)
    if src.edge_count == 0:
        src = clique(n)
    try:
        inst = sample_pair(src, SamplingConfig(s, rng + 1))
    except ValueError:
        inst = sample_pair(src, SamplingConfig(1.0, rng + 1))
    k = draw(st.integers(1, min(4, len(inst.truth))))
    return inst.with_seed(pick_seed(inst, k, rng + 2))

