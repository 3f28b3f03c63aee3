"""Experiment grids over overlap and seed size, with tidy CSV output."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .engine import weight
from .ews import expand_when_stuck
from .graph import Graph, read_edge_list
from .irma import IrmaConfig, IrmaRun, irma, make_scorer
from .metrics import write_csv
from .parallel import parallel_ews, parallel_irma
from .synth import Instance, SamplingConfig, barabasi_albert, erdos_renyi, pick_seed, sample_pair

log = logging.getLogger(__name__)

ALGORITHMS = ("ews", "irma", "parallel-ews", "parallel-irma")

RESULT_FIELDS = [
    "source", "s", "seed_size", "rep", "algo", "instance_rng", "config_hash",
    "iteration", "phase", "threshold", "final", "matched", "weight", "weight_per_pair",
    "precision", "recall", "f1", "reachable_recall",
]
SUMMARY_FIELDS = [
    "source", "s", "seed_size", "algo", "runs",
    "precision_mean", "precision_se", "recall_mean", "recall_se",
    "f1_mean", "f1_se", "weight_mean", "weight_se", "iterations_mean",
]


class PlanError(ValueError):
    pass


@dataclass
class ExperimentPlan:
    source: str = "er"
    source_params: dict[str, Any] = field(default_factory=dict)
    s_values: list[float] = field(default_factory=lambda: [0.6])
    seed_sizes: list[int] = field(default_factory=lambda: [50])
    repetitions: int = 5
    algorithms: list[str] = field(default_factory=lambda: ["ews", "irma"])
    rng_seed: int = 0
    output: str = "results"
    irma: dict[str, Any] = field(default_factory=dict)
    workers: int = 1
    jobs: int = 1
    relabel: bool = True

    def __post_init__(self):
        if self.repetitions < 1:
            raise PlanError("repetitions must be >= 1")
        for s in self.s_values:
            if not 0 < s <= 1:
                raise PlanError(f"s={s} outside (0, 1]")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise PlanError(f"unknown algorithm {a!r}; choose from {ALGORITHMS}")
        if any(k < 0 for k in self.seed_sizes):
            raise PlanError("seed sizes must be >= 0")
        IrmaConfig(**self.irma)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentPlan":
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise PlanError(f"unknown plan keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentPlan":
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # python < 3.11
                import tomli as tomllib
            return cls.from_dict(tomllib.loads(path.read_text()))
        return cls.from_dict(json.loads(path.read_text()))


def config_hash(algo: str, cfg: dict[str, Any]) -> str:
    blob = json.dumps({"algo": algo, **cfg}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _derive(*key: int) -> int:
    return int(np.random.SeedSequence(list(key)).generate_state(1, dtype=np.uint64)[0] >> 1)


def make_source(plan: ExperimentPlan, rep: int) -> Graph:
    p = plan.source_params
    gseed = _derive(plan.rng_seed, 1, rep)
    if plan.source == "er":
        n = int(p.get("n", 2000))
        prob = p["p"] if "p" in p else float(p.get("mean_degree", 10)) / (n - 1)
        return erdos_renyi(n, prob, gseed)
    if plan.source == "ba":
        return barabasi_albert(int(p.get("n", 2000)), int(p.get("m", 5)), gseed)
    path = Path(plan.source)
    if not path.exists():
        raise PlanError(f"source {plan.source!r} is neither er, ba nor a readable edge list")
    return read_edge_list(path)


def make_instance(plan: ExperimentPlan, si: int, ki: int, rep: int, source: Graph | None = None) -> Instance:
    """Instance for one grid cell.

    The source graph depends on ``rep`` only and the edge sample on
    ``(rep, s)``, so cells that differ only in seed size share g1 and g2.
    """
    if source is None:
        source = make_source(plan, rep)
    s = plan.s_values[si]
    sample_rng = _derive(plan.rng_seed, 2, rep, si)
    inst = sample_pair(source, SamplingConfig(s, sample_rng, plan.relabel), name=str(plan.source))
    k = plan.seed_sizes[ki]
    seed_rng = _derive(plan.rng_seed, 3, rep, si, ki)
    return inst.with_seed(pick_seed(inst, k, seed_rng), seed_rng)


def run_algorithm(algo: str, inst: Instance, cfg: IrmaConfig, workers: int = 1) -> IrmaRun:
    """Run one algorithm and return it in snapshot form (single snapshot for EWS)."""
    g1, g2, seed, truth = inst.g1, inst.g2, inst.seed, inst.truth
    if algo == "irma":
        return irma(g1, g2, seed, cfg, truth)
    if algo == "parallel-irma":
        return parallel_irma(g1, g2, seed, cfg, truth, workers)
    from .irma import IterationSnapshot

    t0 = time.perf_counter()
    if algo == "ews":
        r = expand_when_stuck(g1, g2, seed, a_cap=cfg.a_cap)
    elif algo == "parallel-ews":
        r = parallel_ews(g1, g2, seed, workers, cfg.a_cap)
    else:
        raise PlanError(f"unknown algorithm {algo!r}")
    snap = IterationSnapshot(0, "ews", 2, r.matching, r.marks, weight(g1, g2, r.matching),
                             seconds=time.perf_counter() - t0, increments=r.stats.increments)
    scorer = make_scorer(g1, g2, truth)
    if scorer is not None:
        snap.metrics = scorer(r.matching)
    return IrmaRun([snap])


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def run_rows(run: IrmaRun, base: dict[str, Any]) -> list[dict[str, Any]]:
    rows = []
    final = run.final
    for snap in run:
        m = snap.metrics
        size = len(snap.matching)
        rows.append({
            **base,
            "iteration": snap.index,
            "phase": snap.phase,
            "threshold": snap.threshold,
            "final": int(snap is final),
            "matched": size,
            "weight": snap.weight,
            "weight_per_pair": _fmt(snap.weight / size if size else 0.0),
            "precision": _fmt(m.precision) if m else "",
            "recall": _fmt(m.recall) if m else "",
            "f1": _fmt(m.f1) if m else "",
            "reachable_recall": _fmt(m.reachable_recall) if m else "",
        })
    return rows


def _run_cell(plan: ExperimentPlan, si: int, ki: int, rep: int, source: Graph | None):
    """Returns ``(rows, timings, error)`` for one (s, seed size, repetition) cell."""
    cell = {"source": str(plan.source), "s": plan.s_values[si], "seed_size": plan.seed_sizes[ki], "rep": rep}
    try:
        inst = make_instance(plan, si, ki, rep, source)
        cfg = IrmaConfig(**plan.irma)
        rows, timings = [], []
        for algo in plan.algorithms:
            t0 = time.perf_counter()
            run = run_algorithm(algo, inst, cfg, plan.workers)
            timings.append({**cell, "algo": algo, "seconds": f"{time.perf_counter() - t0:.4f}"})
            base = {**cell, "algo": algo, "instance_rng": inst.meta["rng_seed"],
                    "config_hash": config_hash(algo, asdict(cfg))}
            rows.extend(run_rows(run, base))
        return rows, timings, None
    except Exception as exc:  # one bad cell must not sink the grid
        log.exception("cell %s failed", cell)
        return [], [], {**cell, "error": f"{type(exc).__name__}: {exc}"}


def _stats(xs: list[float]) -> tuple[float, float]:
    if not xs:
        return math.nan, math.nan
    mean = sum(xs) / len(xs)
    if len(xs) < 2:
        return mean, 0.0
    var = sum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
    return mean, math.sqrt(var / len(xs))


def summarize(rows: list[dict[str, Any]]) -> list[dict[str, Any]]:
    groups: dict[tuple, list[dict]] = defaultdict(list)
    iters: dict[tuple, dict[int, int]] = defaultdict(dict)
    for r in rows:
        key = (str(r["source"]), float(r["s"]), int(r["seed_size"]), r["algo"])
        run_id = int(r["rep"])
        iters[key][run_id] = max(iters[key].get(run_id, 0), int(r["iteration"]) + 1)
        if int(r["final"]):
            groups[key].append(r)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3])):
        g = groups[key]
        row = {"source": key[0], "s": key[1], "seed_size": key[2], "algo": key[3], "runs": len(g)}
        for metric in ("precision", "recall", "f1", "weight"):
            vals = [float(r[metric]) for r in g if r[metric] != ""]
            mean, se = _stats(vals)
            row[f"{metric}_mean"] = _fmt(mean)
            row[f"{metric}_se"] = _fmt(se)
        its = list(iters[key].values())
        row["iterations_mean"] = _fmt(sum(its) / len(its))
        out.append(row)
    return out


def run_plan(plan: ExperimentPlan, out_dir: str | Path | None = None) -> tuple[Path, list[dict]]:
    """Execute every grid cell and write results, summary, timing and meta files.

    Returns the output directory and the list of failed cells.
    """
    out = Path(out_dir or plan.output)
    out.mkdir(parents=True, exist_ok=True)
    cells = [
        (si, ki, rep)
        for rep in range(plan.repetitions)
        for si in range(len(plan.s_values))
        for ki in range(len(plan.seed_sizes))
    ]
    fixed_source = None
    if plan.source not in ("er", "ba"):
        try:
            fixed_source = make_source(plan, 0)
        except Exception as exc:
            raise PlanError(f"cannot read source: {exc}") from exc

    if plan.jobs > 1:
        with ProcessPoolExecutor(max_workers=plan.jobs) as pool:
            futures = [pool.submit(_run_cell, plan, si, ki, rep, fixed_source) for si, ki, rep in cells]
            results = [f.result() for f in futures]
    else:
        results = [_run_cell(plan, si, ki, rep, fixed_source) for si, ki, rep in cells]

    rows, timings, errors = [], [], []
    for r, t, e in results:
        rows.extend(r)
        timings.extend(t)
        if e is not None:
            errors.append(e)
    write_csv(rows, out / "results.csv", RESULT_FIELDS)
    write_csv(summarize(rows), out / "summary.csv", SUMMARY_FIELDS)
    write_csv(timings, out / "timing.csv", ["source", "s", "seed_size", "rep", "algo", "seconds"])
    if errors:
        write_csv(errors, out / "errors.csv", ["source", "s", "seed_size", "rep", "error"])
    meta = {
        "plan": asdict(plan),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cells": len(cells),
        "failed_cells": len(errors),
        "config_hashes": {a: config_hash(a, asdict(IrmaConfig(**plan.irma))) for a in plan.algorithms},
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out, errors


def read_results(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in RESULT_FIELDS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        return list(reader)


PLOT_FILES = {
    "metric_vs_seed.csv": ["source", "algo", "s", "seed_size", "metric", "mean", "se", "runs"],
    "metric_vs_iteration.csv": ["source", "algo", "s", "seed_size", "rep", "iteration", "phase",
                                "precision", "recall", "f1", "weight", "matched"],
    "precision_delta.csv": ["source", "algo", "s", "seed_size", "rep", "iteration", "since_explore",
                            "d_precision", "d_weight_per_pair", "d_matched"],
}


def emit_plot_data(results_dir: str | Path) -> dict[str, Path]:
    """Write one long-format CSV per figure family into ``results_dir/plots``."""
    d = Path(results_dir)
    rows = read_results(d / "results.csv")
    for r in rows:
        for col in ("precision", "recall", "f1"):
            if r[col] == "":
                raise ValueError(
                    f"cell source={r['source']} s={r['s']} seed={r['seed_size']} "
                    f"algo={r['algo']} rep={r['rep']}: column {col!r} is empty"
                )
    plots = d / "plots"
    plots.mkdir(exist_ok=True)

    by_seed = []
    for s in summarize(rows):
        for metric in ("precision", "recall", "f1"):
            by_seed.append({
                "source": s["source"], "algo": s["algo"], "s": s["s"], "seed_size": s["seed_size"],
                "metric": metric, "mean": s[f"{metric}_mean"], "se": s[f"{metric}_se"], "runs": s["runs"],
            })

    by_iter = [{k: r[k] for k in PLOT_FILES["metric_vs_iteration.csv"]} for r in rows]

    deltas = []
    runs: dict[tuple, list[dict]] = defaultdict(list)
    for r in rows:
        runs[(r["source"], r["algo"], r["s"], r["seed_size"], r["rep"])].append(r)
    for key, snaps in runs.items():
        snaps.sort(key=lambda r: int(r["iteration"]))
        start = next((i for i, r in enumerate(snaps) if r["phase"] == "explore"), None)
        if start is None:
            continue
        for i in range(start + 1, len(snaps)):
            a, b = snaps[i - 1], snaps[i]
            deltas.append({
                "source": key[0], "algo": key[1], "s": key[2], "seed_size": key[3], "rep": key[4],
                "iteration": b["iteration"], "since_explore": i - start,
                "d_precision": _fmt(float(b["precision"]) - float(a["precision"])),
                "d_weight_per_pair": _fmt(float(b["weight_per_pair"]) - float(a["weight_per_pair"])),
                "d_matched": int(b["matched"]) - int(a["matched"]),
            })

    written = {}
    for name, data in (("metric_vs_seed.csv", by_seed), ("metric_vs_iteration.csv", by_iter),
                       ("precision_delta.csv", deltas)):
        path = plots / name
        write_csv(data, path, PLOT_FILES[name])
        written[name] = path
    return written
