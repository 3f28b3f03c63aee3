"""Command-line entry point: ``irmatch gen|run|sweep|report``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .experiment import ALGORITHMS, ExperimentPlan, PlanError, emit_plot_data, run_algorithm, run_plan
from .graph import GraphError, read_edge_list
from .irma import IrmaConfig
from .synth import (
    SamplingConfig,
    barabasi_albert,
    erdos_renyi,
    load_instance,
    pick_seed,
    sample_pair,
    save_instance,
)

log = logging.getLogger("irmatch")

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


def _add_irma_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("algorithm")
    g.add_argument("--delta", type=float, default=None, help="phase-1 stop: continue while weight grows by > delta")
    g.add_argument("--explore", action=argparse.BooleanOptionalAction, default=None,
                   help="run one threshold-1 iteration after phase 1")
    g.add_argument("--post-explore-iters", type=int, default=None)
    g.add_argument("--max-iters", type=int, default=None, help="cap on phase-1 repairing iterations")
    g.add_argument("--parallel", action="store_true", help="use the epoch-parallel variant")
    g.add_argument("--workers", type=int, default=None)


def _irma_overrides(args: argparse.Namespace) -> dict:
    out = {}
    for name in ("delta", "explore", "post_explore_iters", "max_iters"):
        val = getattr(args, name, None)
        if val is not None:
            out[name] = val
    return out


def _source_graph(args: argparse.Namespace):
    if args.source == "er":
        p = args.p if args.p is not None else args.mean_degree / (args.n - 1)
        return erdos_renyi(args.n, p, args.rng_seed)
    if args.source == "ba":
        return barabasi_albert(args.n, args.m, args.rng_seed)
    return read_edge_list(args.source)


def cmd_gen(args: argparse.Namespace) -> int:
    src = _source_graph(args)
    inst = sample_pair(src, SamplingConfig(args.s, args.rng_seed + 1, not args.no_relabel), name=args.source)
    k = min(args.seed_size, len(inst.truth))
    inst = inst.with_seed(pick_seed(inst, k, args.rng_seed + 2), args.rng_seed + 2)
    save_instance(inst, args.out)
    print(json.dumps({"out": str(args.out), "g1": [inst.g1.n, inst.g1.edge_count],
                      "g2": [inst.g2.n, inst.g2.edge_count], "truth": len(inst.truth), "seed": len(inst.seed)}))
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    if not inst.seed:
        raise PlanError(f"{args.instance}: instance has no seed pairs")
    algo = args.algo
    if args.parallel and not algo.startswith("parallel-"):
        algo = f"parallel-{algo}"
    cfg = IrmaConfig(**_irma_overrides(args))
    workers = args.workers or 1
    if algo in ("irma", "parallel-irma") and args.trace:
        from .irma import irma
        from .parallel import parallel_irma

        if algo == "irma":
            run = irma(inst.g1, inst.g2, inst.seed, cfg, inst.truth, trace=True)
        else:
            run = parallel_irma(inst.g1, inst.g2, inst.seed, cfg, inst.truth, workers, trace=True)
    else:
        run = run_algorithm(algo, inst, cfg, workers)

    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for snap in run:
            rec = {"algo": algo, "iteration": snap.index, "phase": snap.phase, "threshold": snap.threshold,
                   "final": snap is run.final, "matched": len(snap.matching), "weight": snap.weight}
            if snap.metrics is not None:
                rec.update(json.loads(snap.metrics.to_json()))
            out.write(json.dumps(rec, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.trace:
        tr = run.final.trace
        if tr is None:
            log.warning("no trace recorded for %s", algo)
        else:
            tr.to_tsv(args.trace, inst.truth)
    if args.matching:
        lab1, lab2 = inst.g1.labels, inst.g2.labels
        with open(args.matching, "w") as fh:
            for u, v in sorted(run.final.matching):
                fh.write(f"{lab1[u]}\t{lab2[v]}\n")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    plan = ExperimentPlan.load(args.plan)
    d = asdict(plan)
    d["irma"] = {**d["irma"], **_irma_overrides(args)}
    if args.parallel:
        d["algorithms"] = [a if a.startswith("parallel-") else f"parallel-{a}" for a in d["algorithms"]]
    if args.workers:
        d["workers"] = args.workers
    if args.jobs:
        d["jobs"] = args.jobs
    if args.repetitions is not None:
        d["repetitions"] = args.repetitions
    if args.rng_seed is not None:
        d["rng_seed"] = args.rng_seed
    plan = ExperimentPlan.from_dict(d)
    out, errors = run_plan(plan, args.out)
    emit_plot_data(out)
    print(json.dumps({"out": str(out), "failed_cells": len(errors)}))
    for e in errors:
        log.error("cell s=%s seed=%s rep=%s: %s", e["s"], e["seed_size"], e["rep"], e["error"])
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    written = emit_plot_data(args.results)
    for name, path in written.items():
        print(f"{name}\t{path}")
    summary = Path(args.results) / "summary.csv"
    if summary.exists():
        print(summary.read_text(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="irmatch", description="Seeded graph matching with iterative repair.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a sampled graph pair with truth and seed")
    g.add_argument("--source", default="er", help="er, ba or an edge-list path")
    g.add_argument("--n", type=int, default=2000)
    g.add_argument("--mean-degree", type=float, default=10.0)
    g.add_argument("--p", type=float, default=None, help="ER edge probability (overrides --mean-degree)")
    g.add_argument("--m", type=int, default=5, help="BA edges per new vertex")
    g.add_argument("--s", type=float, default=0.7, help="edge survival probability")
    g.add_argument("--seed-size", type=int, default=100)
    g.add_argument("--rng-seed", type=int, default=0)
    g.add_argument("--no-relabel", action="store_true")
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one algorithm on a saved instance")
    r.add_argument("instance", type=Path)
    r.add_argument("--algo", choices=ALGORITHMS, default="irma")
    _add_irma_flags(r)
    r.add_argument("--out", type=Path, help="JSON-lines metrics (default stdout)")
    r.add_argument("--trace", type=Path, help="write the final iteration's insertion trace as TSV")
    r.add_argument("--matching", type=Path, help="write the final matching as label pairs")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run an experiment plan (JSON or TOML)")
    s.add_argument("plan", type=Path)
    s.add_argument("--out", type=Path)
    s.add_argument("--jobs", type=int, default=None, help="grid cells run in parallel")
    s.add_argument("--repetitions", type=int, default=None)
    s.add_argument("--rng-seed", type=int, default=None)
    _add_irma_flags(s)
    s.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="write plot-ready CSVs for a results directory")
    rep.add_argument("results", type=Path)
    rep.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (PlanError, GraphError, ValueError, OSError) as exc:
        print(f"irmatch: error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
