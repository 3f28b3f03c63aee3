"""Ground-truth scores and convergence diagnostics for matchings."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .engine import Matching, weight
from .graph import Graph


@dataclass
class MetricsReport:
    precision: float
    recall: float
    f1: float
    weight: int
    matched_count: int
    weight_per_pair: float
    correct: int = 0
    truth_size: int = 0
    reachable_recall: float = 0.0
    precision_undefined: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def reachable_truth(g1: Graph, g2: Graph, truth: Mapping[int, int]) -> set[int]:
    """g1 vertices whose true pair has at least two common true neighbors.

    Only those pairs can ever collect two marks from correctly matched
    neighbors.
    """
    out = set()
    for u, v in truth.items():
        common = 0
        for w in g1.adj[u]:
            x = truth.get(w)
            if x is not None and g2.has_edge(v, x):
                common += 1
                if common >= 2:
                    out.add(u)
                    break
    return out


def score_matching(
    m: Matching,
    truth: Mapping[int, int],
    g1: Graph,
    g2: Graph,
    reachable: set[int] | None = None,
) -> MetricsReport:
    """Precision, recall and F1 of ``m`` against ``truth``, plus weight(M).

    With an empty matching precision is reported as 0 and flagged.
    """
    correct = sum(1 for u, v in m.forward.items() if truth.get(u) == v)
    size = len(m)
    precision = correct / size if size else 0.0
    recall = correct / len(truth) if truth else 0.0
    w = weight(g1, g2, m)
    if reachable is None:
        reachable = reachable_truth(g1, g2, truth)
    hit = sum(1 for u in reachable if m.forward.get(u) == truth[u])
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        weight=w,
        matched_count=size,
        weight_per_pair=w / size if size else 0.0,
        correct=correct,
        truth_size=len(truth),
        reachable_recall=hit / len(reachable) if reachable else 0.0,
        precision_undefined=size == 0,
    )


DELTA_FIELDS = ("weight", "matched_count", "weight_per_pair", "precision", "recall", "f1")


def convergence_deltas(snapshots: Sequence) -> list[dict]:
    """Iteration-to-iteration changes of weight, |M|, weight/|M| and accuracy.

    Accepts snapshots carrying ``weight``, ``matching`` and optional
    ``metrics``.  Accuracy deltas are None when no ground truth was scored.
    """
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    rows = []
    for prev, cur in zip(snapshots, snapshots[1:]):
        a, b = _summary(prev), _summary(cur)
        row = {"iteration": cur.index, "phase": getattr(cur, "phase", "")}
        for k in DELTA_FIELDS:
            row[f"d_{k}"] = None if a[k] is None or b[k] is None else b[k] - a[k]
        rows.append(row)
    return rows


def _summary(snap) -> dict:
    size = len(snap.matching)
    out = {
        "weight": snap.weight,
        "matched_count": size,
        "weight_per_pair": snap.weight / size if size else 0.0,
        "precision": None,
        "recall": None,
        "f1": None,
    }
    if snap.metrics is not None:
        out.update(precision=snap.metrics.precision, recall=snap.metrics.recall, f1=snap.metrics.f1)
    return out


def write_csv(rows: Sequence[dict], path: str | Path, fields: Sequence[str] | None = None) -> None:
    fields = list(fields or (rows[0].keys() if rows else []))
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)
