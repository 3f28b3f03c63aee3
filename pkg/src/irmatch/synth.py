"""Correlated graph pairs with known ground truth.

All randomness goes through :func:`make_rng`, a numpy ``Generator`` over the
counter-based Philox bit generator, so a given integer seed reproduces the same
instance on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .graph import Graph, GraphError, read_edge_list, write_edge_list


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class SamplingConfig:
    s: float
    rng_seed: int = 0
    relabel: bool = True

    def __post_init__(self):
        if not 0.0 < self.s <= 1.0:
            raise ValueError(f"s must be in (0, 1], got {self.s}")


@dataclass
class Instance:
    """Two sampled graphs plus the true vertex correspondence.

    ``truth`` maps g1 ids to g2 ids.  ``seed`` is a list of ``(u, v)`` pairs
    taken from ``truth``.
    """

    g1: Graph
    g2: Graph
    truth: dict[int, int]
    seed: list[tuple[int, int]] = field(default_factory=list)
    meta: dict[str, Any] = field(default_factory=dict)

    def with_seed(self, seed: list[tuple[int, int]], rng_seed: int | None = None) -> "Instance":
        meta = dict(self.meta, seed_size=len(seed))
        if rng_seed is not None:
            meta["seed_rng"] = rng_seed
        return Instance(self.g1, self.g2, self.truth, list(seed), meta)


def erdos_renyi(n: int, p: float, rng_seed: int) -> Graph:
    """G(n, p): each of the n(n-1)/2 possible edges kept independently.

    Uses geometric skipping over the row-major upper triangle, so the cost is
    proportional to the number of edges drawn rather than n^2.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    total = n * (n - 1) // 2
    if p == 0.0:
        return Graph(n, [])
    rng = make_rng(rng_seed)
    if p == 1.0:
        idx = np.arange(total, dtype=np.int64)
    else:
        chunks = []
        pos = -1
        batch = max(16, int(total * p * 1.1) + 16)
        while True:
            steps = rng.geometric(p, size=batch).astype(np.int64)
            picks = pos + np.cumsum(steps)
            done = picks[-1] >= total
            picks = picks[picks < total]
            chunks.append(picks)
            if done:
                break
            pos = int(picks[-1])
        idx = np.concatenate(chunks)
    # row i owns linear indices [off[i], off[i+1])
    off = np.concatenate(([0], np.cumsum(np.arange(n - 1, 0, -1, dtype=np.int64))))
    rows = np.searchsorted(off, idx, side="right") - 1
    cols = rows + 1 + (idx - off[rows])
    return Graph(n, zip(rows.tolist(), cols.tolist()))


def barabasi_albert(n: int, m: int, rng_seed: int) -> Graph:
    """Preferential attachment grown from a clique on ``m`` vertices.

    Every later vertex attaches to ``m`` distinct existing vertices chosen with
    probability proportional to degree, so the graph has exactly
    ``m * (n - m) + m * (m - 1) / 2`` edges.  With ``m == 1`` the first
    newcomer attaches to vertex 0.
    """
    if not n > m >= 1:
        raise ValueError("need n > m >= 1")
    rng = make_rng(rng_seed)
    edges = [(i, j) for i in range(m) for j in range(i + 1, m)]
    # one entry per edge endpoint: uniform draws from it are degree-proportional
    ends: list[int] = [x for e in edges for x in e]
    for new in range(m, n):
        if not ends:
            targets = list(range(new))
        else:
            chosen: set[int] = set()
            while len(chosen) < m:
                draws = rng.integers(0, len(ends), size=m - len(chosen))
                for d in draws.tolist():
                    chosen.add(ends[d])
                    if len(chosen) == m:
                        break
            targets = sorted(chosen)
        for t in targets:
            edges.append((t, new))
            ends.extend((t, new))
    return Graph(n, edges)


def _compact(n: int, edges: np.ndarray) -> tuple[list[int], list[tuple[int, int]]]:
    """Drop vertices with no edges; return kept source ids and re-indexed edges."""
    used = np.zeros(n, dtype=bool)
    used[edges.ravel()] = True
    kept = np.flatnonzero(used)
    remap = np.full(n, -1, dtype=np.int64)
    remap[kept] = np.arange(len(kept))
    sub = remap[edges]
    return kept.tolist(), list(map(tuple, sub.tolist()))


def sample_pair(source: Graph, cfg: SamplingConfig, name: str = "graph") -> Instance:
    """Sample g1 and g2 by keeping each source edge independently with prob ``s``.

    Isolated vertices are removed from each graph separately; the ground truth
    covers the source vertices that survive in both.  With ``cfg.relabel`` the
    g2 ids are a uniform random permutation.
    """
    if source.edge_count == 0:
        raise GraphError("empty graph")
    rng = make_rng(cfg.rng_seed)
    e = np.array(list(source.edges()), dtype=np.int64).reshape(-1, 2)
    keep1 = rng.random(len(e)) < cfg.s
    keep2 = rng.random(len(e)) < cfg.s
    e1, e2 = e[keep1], e[keep2]
    if len(e1) == 0 or len(e2) == 0:
        raise GraphError("degenerate overlap")
    kept1, edges1 = _compact(source.n, e1)
    kept2, edges2 = _compact(source.n, e2)

    n2 = len(kept2)
    perm = rng.permutation(n2) if cfg.relabel else np.arange(n2)
    perm_l = perm.tolist()
    edges2 = [(perm_l[a], perm_l[b]) for a, b in edges2]
    g1 = Graph(len(kept1), edges1, [source.labels[v] for v in kept1])
    labels2: list[Any] = [None] * n2
    for old, src in enumerate(kept2):
        labels2[perm_l[old]] = source.labels[src] if not cfg.relabel else f"b{perm_l[old]}"
    g2 = Graph(n2, edges2, labels2)

    where2 = {src: perm_l[i] for i, src in enumerate(kept2)}
    truth = {i: where2[src] for i, src in enumerate(kept1) if src in where2}
    if not truth:
        raise GraphError("degenerate overlap")
    meta = {
        "source": name,
        "source_vertices": source.n,
        "source_edges": source.edge_count,
        "s": cfg.s,
        "rng_seed": cfg.rng_seed,
        "relabel": cfg.relabel,
        "seed_size": 0,
    }
    return Instance(g1, g2, truth, [], meta)


def pick_seed(instance: Instance, size: int, rng_seed: int) -> list[tuple[int, int]]:
    """Uniform sample of ``size`` true pairs, without replacement."""
    if size < 0 or size > len(instance.truth):
        raise ValueError(f"seed size {size} outside [0, {len(instance.truth)}]")
    rng = make_rng(rng_seed)
    pairs = sorted(instance.truth.items())
    idx = rng.choice(len(pairs), size=size, replace=False)
    return [pairs[i] for i in idx.tolist()]


def save_instance(inst: Instance, directory: str | Path) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_edge_list(inst.g1, d / "g1.edges")
    write_edge_list(inst.g2, d / "g2.edges")
    lab1, lab2 = inst.g1.labels, inst.g2.labels
    with open(d / "truth.tsv", "w") as fh:
        for u, v in sorted(inst.truth.items()):
            fh.write(f"{lab1[u]}\t{lab2[v]}\n")
    with open(d / "seed.tsv", "w") as fh:
        for u, v in inst.seed:
            fh.write(f"{lab1[u]}\t{lab2[v]}\n")
    (d / "meta.json").write_text(json.dumps(inst.meta, indent=2, sort_keys=True) + "\n")
    return d


def _read_pairs(path: Path, g1: Graph, g2: Graph) -> list[tuple[int, int]]:
    out = []
    if not path.exists():
        return out
    for line in path.read_text().splitlines():
        if not line.strip():
            continue
        a, b = line.split("\t")
        try:
            out.append((g1.index_of(a), g2.index_of(b)))
        except KeyError:
            # vertex isolated in one graph; it was dropped from that edge list
            continue
    return out


def load_instance(directory: str | Path) -> Instance:
    d = Path(directory)
    g1 = read_edge_list(d / "g1.edges")
    g2 = read_edge_list(d / "g2.edges")
    truth = dict(_read_pairs(d / "truth.tsv", g1, g2))
    seed = _read_pairs(d / "seed.tsv", g1, g2)
    meta_path = d / "meta.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    return Instance(g1, g2, truth, seed, meta)
