import csv
import json

import pytest

from irmatch.cli import main
from irmatch.experiment import (
    PLOT_FILES,
    RESULT_FIELDS,
    ExperimentPlan,
    PlanError,
    emit_plot_data,
    run_plan,
)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _plan(tmp_path, **kw):
    base = dict(source="er", source_params={"n": 200, "mean_degree": 8}, s_values=[0.8], seed_sizes=[15],
                repetitions=1, algorithms=["ews", "irma"], output=str(tmp_path / "out"))
    base.update(kw)
    return ExperimentPlan.from_dict(base)


def test_plan_validation():
    with pytest.raises(PlanError):
        ExperimentPlan(repetitions=0)
    with pytest.raises(PlanError):
        ExperimentPlan(s_values=[0.0])
    with pytest.raises(PlanError):
        ExperimentPlan(algorithms=["magic"])
    with pytest.raises(PlanError):
        ExperimentPlan.from_dict({"colour": "red"})
    with pytest.raises(ValueError):
        ExperimentPlan(irma={"delta": -1})


def test_repetitions_make_result_groups(tmp_path):
    out, errors = run_plan(_plan(tmp_path, repetitions=5, algorithms=["irma"]))
    assert not errors
    rows = _read(out / "results.csv")
    assert sorted({r["rep"] for r in rows}) == [str(i) for i in range(5)]
    assert sum(int(r["final"]) for r in rows) == 5
    summary = _read(out / "summary.csv")
    assert len(summary) == 1 and summary[0]["runs"] == "5"
    assert float(summary[0]["f1_se"]) >= 0
    meta = json.loads((out / "meta.json").read_text())
    assert meta["plan"]["repetitions"] == 5 and meta["version"]


def test_grid_cardinality_and_provenance(tmp_path):
    plan = _plan(tmp_path, s_values=[0.6, 0.8], seed_sizes=[10, 20])
    out, _ = run_plan(plan)
    summary = _read(out / "summary.csv")
    for algo in ("ews", "irma"):
        assert sum(r["algo"] == algo for r in summary) == 4
    rows = _read(out / "results.csv")
    assert list(rows[0]) == RESULT_FIELDS
    assert all(r["instance_rng"] and len(r["config_hash"]) == 12 for r in rows)


def test_results_are_byte_identical(tmp_path):
    a, _ = run_plan(_plan(tmp_path), tmp_path / "a")
    b, _ = run_plan(_plan(tmp_path), tmp_path / "b")
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    assert (a / "summary.csv").read_bytes() == (b / "summary.csv").read_bytes()


def test_bad_cell_is_recorded_and_plan_continues(tmp_path):
    plan = _plan(tmp_path, seed_sizes=[10, 100000])
    out, errors = run_plan(plan)
    assert len(errors) == 1 and "seed size" in errors[0]["error"]
    assert _read(out / "errors.csv")[0]["seed_size"] == "100000"
    assert {r["seed_size"] for r in _read(out / "results.csv")} == {"10"}


def test_unreadable_source_is_fatal(tmp_path):
    with pytest.raises(PlanError):
        run_plan(_plan(tmp_path, source=str(tmp_path / "missing.edges")))


def test_edge_list_source(tmp_path):
    p = tmp_path / "g.edges"
    p.write_text("".join(f"{a} {b}\n" for a in range(12) for b in range(a + 1, 12) if (a * b) % 3 != 1))
    out, errors = run_plan(_plan(tmp_path, source=str(p), s_values=[0.9], seed_sizes=[3]))
    assert not errors and _read(out / "results.csv")


def test_plot_data_empty(tmp_path):
    d = tmp_path / "r"
    d.mkdir()
    (d / "results.csv").write_text(",".join(RESULT_FIELDS) + "\n")
    written = emit_plot_data(d)
    for name, path in written.items():
        assert path.read_text() == ",".join(PLOT_FILES[name]) + "\n"


def test_plot_data_single_run(tmp_path):
    out, _ = run_plan(_plan(tmp_path, algorithms=["irma"], irma={"explore": True, "post_explore_iters": 2}))
    emit_plot_data(out)
    n_snap = len(_read(out / "results.csv"))
    it = _read(out / "plots" / "metric_vs_iteration.csv")
    assert len(it) == n_snap
    deltas = _read(out / "plots" / "precision_delta.csv")
    assert [int(r["since_explore"]) for r in deltas] == [1, 2]


def test_plot_data_two_algorithms(tmp_path):
    out, _ = run_plan(_plan(tmp_path))
    emit_plot_data(out)
    seed = _read(out / "plots" / "metric_vs_seed.csv")
    assert {r["algo"] for r in seed} == {"ews", "irma"}
    assert {r["metric"] for r in seed} == {"precision", "recall", "f1"}


def test_plot_data_errors(tmp_path):
    d = tmp_path / "r"
    d.mkdir()
    (d / "results.csv").write_text("source,s\ner,0.5\n")
    with pytest.raises(ValueError, match="missing columns"):
        emit_plot_data(d)
    out, _ = run_plan(_plan(tmp_path, algorithms=["ews"]))
    rows = _read(out / "results.csv")
    rows[0]["f1"] = ""
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
        w.writeheader()
        w.writerows(rows)
    with pytest.raises(ValueError, match="algo=ews rep=0"):
        emit_plot_data(out)


def test_cli_gen_run_report(tmp_path, capsys):
    inst = tmp_path / "inst"
    assert main(["gen", "--n", "300", "--mean-degree", "8", "--s", "0.8", "--seed-size", "15", "--out", str(inst)]) == 0
    metrics = tmp_path / "m.jsonl"
    trace = tmp_path / "t.tsv"
    rc = main(["run", str(inst), "--algo", "irma", "--explore", "--post-explore-iters", "2",
               "--out", str(metrics), "--trace", str(trace), "--matching", str(tmp_path / "m.tsv")])
    assert rc == 0
    lines = [json.loads(x) for x in metrics.read_text().splitlines()]
    assert lines[0]["phase"] == "ews" and sum(x["final"] for x in lines) == 1
    assert {"precision", "recall", "f1", "weight"} <= set(lines[-1])
    assert trace.read_text().startswith("step\tpair\tmarks\tdegree_gap\tcorrect\n")
    assert main(["run", str(inst), "--algo", "ews", "--parallel", "--workers", "2", "--out", str(metrics)]) == 0
    assert json.loads(metrics.read_text())["algo"] == "parallel-ews"


def test_cli_sweep_exit_codes(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({"source": "ba", "source_params": {"n": 200, "m": 3}, "s_values": [0.8],
                                "seed_sizes": [10], "repetitions": 1, "algorithms": ["ews"]}))
    out = tmp_path / "res"
    assert main(["sweep", str(plan), "--out", str(out), "--no-explore"]) == 0
    assert main(["report", str(out)]) == 0
    for name in PLOT_FILES:
        assert (out / "plots" / name).exists()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"source": "ba", "source_params": {"n": 200, "m": 3}, "seed_sizes": [10, 10**6],
                               "repetitions": 1, "algorithms": ["ews"]}))
    assert main(["sweep", str(bad), "--out", str(tmp_path / "r2")]) == 2
    assert main(["sweep", str(tmp_path / "nope.json")]) == 1
    assert main(["sweep", str(plan), "--repetitions", "0"]) == 1


def test_toml_plan(tmp_path):
    p = tmp_path / "plan.toml"
    p.write_text('source = "er"\ns_values = [0.7]\nseed_sizes = [10]\nrepetitions = 2\n'
                 'algorithms = ["ews"]\n[source_params]\nn = 150\n[irma]\ndelta = 0.02\n')
    plan = ExperimentPlan.load(p)
    assert plan.source_params == {"n": 150} and plan.irma == {"delta": 0.02}


def test_ba_sweep_irma_never_below_ews(tmp_path):
    plan = ExperimentPlan(source="ba", source_params={"n": 1000, "m": 5}, s_values=[0.6, 0.8],
                          seed_sizes=[50, 100], repetitions=1, algorithms=["ews", "irma"])
    out, errors = run_plan(plan, tmp_path / "ba")
    assert not errors
    f1 = {(r["s"], r["seed_size"], r["algo"]): float(r["f1_mean"]) for r in _read(out / "summary.csv")}
    for (s, k, algo), v in f1.items():
        if algo == "irma":
            assert v >= f1[(s, k, "ews")], (s, k)
