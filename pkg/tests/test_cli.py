import io
import json
from unittest.mock import patch

import pytest

from osreval.__version__ import __version__
from osreval.metrics import evaluate
from osreval.runio import parse_run, parse_split, parse_summaries, write_report, write_scores
from osreval.scoring import score_run

from .utils import app, cmd_args, make_run, runner, stdout_json, write_run_file

SUMMARIES_CSV = """\
run_id,method,dataset,accuracy,auroc,oscr,ap
r1,msp,cub,0.5,0.6,0.4,0.3
r2,msp,scars,0.7,0.8,0.5,0.4
r3,mls,cub,0.6,0.7,0.5,0.4
r4,mls,scars,0.8,0.9,0.7,0.6
"""

CARS_CSV = """\
class,make,model,type,year
bmw-m3-coupe-2012,BMW,M3,Coupe,2012
bmw-m3-coupe-2014,BMW,M3,Coupe,2014
bmw-x5-suv-2012,BMW,X5,SUV,2012
ford-focus-sedan-2010,Ford,Focus,Sedan,2010
"""

TREE = {
    "nodes": [
        {"id": "animal", "parent": None, "class": None},
        {"id": "bird", "parent": "animal", "class": None},
        {"id": "fish", "parent": "animal", "class": None},
        {"id": "gull", "parent": "bird", "class": "gull"},
        {"id": "tern", "parent": "bird", "class": "tern"},
        {"id": "cod", "parent": "fish", "class": "cod"},
        {"id": "eel", "parent": "animal", "class": "eel"},
    ]
}


def library_text(write, *args):
    buffer = io.StringIO()
    write(*args, buffer)
    return buffer.getvalue()


def load_run(path):
    with open(path, encoding="utf-8", newline="") as stream:
        return parse_run(stream)


def test_version():
    result = runner.invoke(app, ["--version"])
    assert result.exit_code == 0
    assert f"osreval {__version__}" in result.stdout


def test_no_arguments_shows_help():
    result = runner.invoke(app, [])
    assert "splits-attr" in result.output


@pytest.mark.parametrize("rule", ["msp", "mls", "norm"])
def test_score_matches_library(run_file, rule):
    result = runner.invoke(app, cmd_args("score", run_file, **{"--rule": rule}))
    assert result.exit_code == 0
    run = load_run(run_file)
    assert result.stdout == library_text(write_scores, run, score_run(run, rule))
    lines = result.stdout.splitlines()
    assert lines[0] == "sample_id,label,score,prediction"
    assert len(lines) == 7


def test_score_norm_without_features(tmp_path):
    path = write_run_file(tmp_path / "plain.csv", make_run([[1.0, 0.0], [0.0, 1.0]], [0, -1]))
    result = runner.invoke(app, cmd_args("score", path, **{"-r": "norm"}))
    assert result.exit_code == 2
    assert "feature-norm rule requires feature vectors" in result.output


def test_score_to_file(run_file, tmp_path):
    output = tmp_path / "scores.csv"
    result = runner.invoke(app, cmd_args("score", run_file, **{"-o": output}))
    assert result.exit_code == 0
    assert result.stdout == ""
    assert output.read_text(encoding="utf-8").startswith("sample_id,label,score,prediction\n")


def test_verbose_logs_progress(run_file):
    result = runner.invoke(app, ["-v", *cmd_args("score", run_file)])
    assert result.exit_code == 0
    assert "Scored 6 samples" in result.output


def test_eval_matches_library(run_file):
    result = runner.invoke(app, cmd_args("eval", run_file, **{"--rule": "msp", "--num-unknown-classes": 2}))
    assert result.exit_code == 0
    report = evaluate(load_run(run_file), "msp", num_unknown_classes=2)
    assert stdout_json(result) == json.loads(library_text(write_report, report))
    assert "roc_points" not in stdout_json(result)


def test_eval_with_curves(run_file):
    result = runner.invoke(app, cmd_args("eval", run_file, **{"--curves": True}))
    assert result.exit_code == 0
    document = stdout_json(result)
    assert document["rule"] == "mls"
    assert document["roc_points"][0] == [0.0, 0.0]
    assert document["oscr_points"][-1][0] == 1.0


def test_eval_without_unknowns(tmp_path):
    path = write_run_file(tmp_path / "closed.csv", make_run([[2.0, 0.0], [0.0, 2.0], [1.0, 0.0]], [0, 1, 1]))
    output = tmp_path / "report.json"
    result = runner.invoke(app, cmd_args("eval", path, **{"-o": output}))
    assert result.exit_code == 0
    document = json.loads(output.read_text(encoding="utf-8"))
    assert document["accuracy"] == pytest.approx(2 / 3)
    assert document["auroc"] is None and document["oscr"] is None and document["ap"] is None
    assert "no unknown samples" in result.output


def test_eval_appends_summaries(run_file, tmp_path):
    summaries = tmp_path / "summaries.csv"
    for run_id, rule in (("a", "msp"), ("b", "mls")):
        result = runner.invoke(
            app,
            cmd_args(
                "eval",
                run_file,
                **{"--rule": rule, "-o": tmp_path / f"{run_id}.json", "--append-summary": summaries, "--run-id": run_id},
            ),
        )
        assert result.exit_code == 0
        assert f"Appended {run_id}" in result.output
    with open(summaries, encoding="utf-8", newline="") as stream:
        rows = parse_summaries(stream)
    assert [(r.run_id, r.method, r.dataset) for r in rows] == [("a", "msp", "run"), ("b", "mls", "run")]
    assert summaries.read_text(encoding="utf-8").count("run_id") == 1

    result = runner.invoke(
        app, cmd_args("eval", run_file, **{"-o": tmp_path / "c.json", "--append-summary": summaries, "--run-id": "a"})
    )
    assert result.exit_code == 2
    assert "already present" in result.output


def test_eval_append_needs_run_id(run_file, tmp_path):
    result = runner.invoke(app, cmd_args("eval", run_file, **{"--append-summary": tmp_path / "s.csv"}))
    assert result.exit_code == 1
    assert "--run-id" in result.output


def test_compare_json(run_file):
    result = runner.invoke(app, cmd_args("compare", run_file, **{"--json": True}))
    assert result.exit_code == 0
    assert [report["rule"] for report in stdout_json(result)] == ["msp", "mls", "feature_norm"]


def test_compare_table_skips_inapplicable_rules(tmp_path):
    path = write_run_file(tmp_path / "plain.csv", make_run([[2.0, 0.0], [0.0, 2.0], [0.5, 0.4]], [0, 1, -1]))
    result = runner.invoke(app, cmd_args("compare", path))
    assert result.exit_code == 0
    assert "msp" in result.stdout and "mls" in result.stdout
    assert "feature_norm" not in result.stdout


def test_compare_rejects_unknown_table_style(run_file, monkeypatch):
    monkeypatch.setenv("TABLE_STYLE", "FANCY")
    result = runner.invoke(app, cmd_args("compare", run_file))
    assert result.exit_code == 1
    assert "TABLE_STYLE" in result.output


def test_splits_attr_is_reproducible(attributes_file, tmp_path):
    args = cmd_args("splits-attr", **{"--matrix": attributes_file, "--num-known": 3, "--samples": 50, "--seed": 1})
    first, second = runner.invoke(app, args), runner.invoke(app, [*args, "--workers", "2"])
    assert first.exit_code == second.exit_code == 0
    assert first.stdout == second.stdout
    split = parse_split(io.StringIO(first.stdout))
    assert len(split.known) == 3
    assert split.meta.seed == 1 and split.meta.samples == 50


def test_splits_attr_summary_and_file(attributes_file, tmp_path):
    output = tmp_path / "split.json"
    args = cmd_args(
        "splits-attr",
        **{"--matrix": attributes_file, "--num-known": 2, "--samples": 10, "--seed": 4, "-o": output, "--summary": True},
    )
    result = runner.invoke(app, args)
    assert result.exit_code == 0
    assert "hard" in result.output
    with open(output, encoding="utf-8") as stream:
        assert parse_split(stream).counts()["known"] == 2


def test_splits_attr_rejects_num_known(attributes_file):
    result = runner.invoke(
        app, cmd_args("splits-attr", **{"--matrix": attributes_file, "--num-known": 6, "--samples": 5, "--seed": 0})
    )
    assert result.exit_code == 1
    assert "--num-known" in result.output


def test_splits_attr_requires_seed(attributes_file):
    result = runner.invoke(app, cmd_args("splits-attr", **{"--matrix": attributes_file, "--num-known": 2, "--samples": 5}))
    assert result.exit_code == 1
    assert "--seed" in result.output


def test_splits_attr_rejects_malformed_worker_setting(attributes_file, monkeypatch):
    monkeypatch.setenv("SEARCH_WORKERS", "many")
    result = runner.invoke(
        app, cmd_args("splits-attr", **{"--matrix": attributes_file, "--num-known": 2, "--samples": 5, "--seed": 0})
    )
    assert result.exit_code == 1
    assert "SEARCH_WORKERS must be an integer" in result.output


def test_splits_hier(write_file):
    table = write_file("cars.csv", CARS_CSV)
    known = write_file("known.txt", "bmw-m3-coupe-2012\n\n")
    result = runner.invoke(app, cmd_args("splits-hier", **{"--table": table, "--scheme": "cars", "--known": known}))
    assert result.exit_code == 0
    split = parse_split(io.StringIO(result.stdout))
    assert split.hard == ("bmw-m3-coupe-2014",)
    assert split.easy == ("bmw-x5-suv-2012", "ford-focus-sedan-2010")
    assert split.meta.seed is None


def test_splits_hier_wrong_scheme(write_file):
    table = write_file("cars.csv", CARS_CSV)
    known = write_file("known.txt", "bmw-m3-coupe-2012\n")
    result = runner.invoke(app, cmd_args("splits-hier", **{"--table": table, "--scheme": "aircraft", "--known": known}))
    assert result.exit_code == 2
    assert "wrong column count for scheme aircraft" in result.output


def test_splits_tree(write_file):
    tree = write_file("tree.json", json.dumps(TREE))
    known = write_file("known.txt", "gull\n")
    result = runner.invoke(
        app, cmd_args("splits-tree", **{"--tree": tree, "--known": known, "--num-easy": 1, "--num-hard": 1})
    )
    assert result.exit_code == 0
    split = parse_split(io.StringIO(result.stdout))
    assert split.hard == ("tern",)
    assert split.easy == ("cod",)
    assert split.difficulty == {"cod": 4.0, "tern": 2.0}


def test_splits_tree_insufficient_classes(write_file):
    tree = write_file("tree.json", json.dumps(TREE))
    known = write_file("known.txt", "gull\n")
    result = runner.invoke(
        app, cmd_args("splits-tree", **{"--tree": tree, "--known": known, "--num-easy": 2, "--num-hard": 2})
    )
    assert result.exit_code == 2
    assert "insufficient open classes" in result.output


def test_correlate_json(write_file):
    path = write_file("summaries.csv", SUMMARIES_CSV)
    result = runner.invoke(app, cmd_args("correlate", path, **{"--json": True, "--group-by": "dataset"}))
    assert result.exit_code == 0
    document = stdout_json(result)
    assert document["overall"]["rho"] == pytest.approx(1.0)
    assert document["overall"]["n"] == 4
    assert document["per_method"]["msp"]["rho"] == pytest.approx(1.0)
    assert document["group_by"] == "dataset"
    assert [group["group"] for group in document["groups"]] == ["cub", "scars"]
    assert document["groups"][0]["mean"]["accuracy"] == pytest.approx(0.55)


def test_correlate_table_marks_undefined(write_file):
    path = write_file("summaries.csv", "\n".join(SUMMARIES_CSV.splitlines()[:3]) + "\nr3,mls,cub,0.6,0.7,0.5,0.4\n")
    result = runner.invoke(app, cmd_args("correlate", path))
    assert result.exit_code == 0
    assert "n/a" in result.stdout
    assert "overall" in result.stdout


def test_correlate_table_ignores_terminal_width(write_file, monkeypatch):
    path = write_file("summaries.csv", SUMMARIES_CSV)
    monkeypatch.setenv("COLUMNS", "40")
    narrow = runner.invoke(app, cmd_args("correlate", path))
    monkeypatch.setenv("COLUMNS", "300")
    wide = runner.invoke(app, cmd_args("correlate", path))
    assert narrow.exit_code == wide.exit_code == 0
    assert narrow.stdout == wide.stdout
    assert "…" not in narrow.stdout
    assert "accuracy mean" in narrow.stdout
    assert "0.6000" in narrow.stdout
    assert "1.0000" in narrow.stdout


def test_correlate_rejects_duplicate_run_ids(write_file):
    path = write_file("summaries.csv", SUMMARIES_CSV + "r1,mls,cub,0.1,0.2,0.1,0.1\n")
    result = runner.invoke(app, cmd_args("correlate", path))
    assert result.exit_code == 2
    assert "duplicate run_id 'r1'" in result.output


def test_synth_is_deterministic(tmp_path):
    args = cmd_args("synth", **{"--seed": 3, "--num-classes": 3, "--samples-per-class": 5, "--num-unknown": 4})
    first, second = runner.invoke(app, args), runner.invoke(app, args)
    assert first.exit_code == 0
    assert first.stdout == second.stdout
    run = parse_run(io.StringIO(first.stdout))
    assert run.num_samples == 19
    assert run.num_classes == 3


def test_bad_data_exit_code(write_file):
    path = write_file("bad.csv", "sample_id,label,logit_0,logit_1\na,0,1.0,2.0\na,1,0.5,0.1\n")
    result = runner.invoke(app, cmd_args("eval", path))
    assert result.exit_code == 2
    assert "duplicate sample_id 'a'" in result.output


def test_missing_file_exit_code(tmp_path):
    result = runner.invoke(app, cmd_args("score", tmp_path / "missing.csv"))
    assert result.exit_code == 1
    assert "does not exist" in result.output
    assert "Internal error" not in result.output


@pytest.mark.parametrize(
    "args",
    [
        ["eval", "--no-such-flag"],
        ["score", "--rule", "entropy", "run.csv"],
        ["synth", "--seed", "zero"],
        ["splits-attr", "--num-known", "3"],
    ],
)
def test_usage_errors_exit_code(args):
    result = runner.invoke(app, args)
    assert result.exit_code == 1
    assert "Internal error" not in result.output


@patch("osreval.app.evaluate")
def test_internal_error_exit_code(evaluate_mock, run_file):
    evaluate_mock.side_effect = RuntimeError("boom")
    result = runner.invoke(app, cmd_args("eval", run_file))
    assert result.exit_code == 3


PIPELINE_NOISE = {0: 0.1, 1: 0.4, 2: 0.8}


def run_pipeline(directory):
    summaries = directory / "summaries.csv"
    steps = []
    for seed, noise in PIPELINE_NOISE.items():
        run = directory / f"run{seed}.csv"
        steps.append(cmd_args("synth", **{"--seed": seed, "--angular-noise": noise, "-o": run}))
        steps.append(cmd_args("score", run, **{"-o": directory / f"scores{seed}.csv"}))
        steps.extend(
            cmd_args(
                "eval",
                run,
                **{
                    "--rule": rule,
                    "-o": directory / f"{rule}{seed}.json",
                    "--append-summary": summaries,
                    "--run-id": f"{rule}-{seed}",
                    "--method": rule,
                },
            )
            for rule in ("msp", "mls")
        )
    steps.append(cmd_args("correlate", summaries, **{"--json": True}))
    steps.append(cmd_args("correlate", summaries))
    results = [runner.invoke(app, step) for step in steps]
    assert [result.exit_code for result in results] == [0] * len(steps)
    return results[-2], results[-1]


def test_end_to_end_pipeline(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    first.mkdir()
    second.mkdir()
    first_json, first_table = run_pipeline(first)
    second_json, second_table = run_pipeline(second)
    assert first_json.stdout == second_json.stdout
    assert first_table.stdout == second_table.stdout
    names = ["summaries.csv"]
    for seed in PIPELINE_NOISE:
        names += [f"run{seed}.csv", f"scores{seed}.csv", f"msp{seed}.json", f"mls{seed}.json"]
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()

    msp = json.loads((first / "msp1.json").read_text(encoding="utf-8"))
    mls = json.loads((first / "mls1.json").read_text(encoding="utf-8"))
    assert mls["auroc"] > msp["auroc"]
    accuracies = {json.loads((first / f"mls{seed}.json").read_text(encoding="utf-8"))["accuracy"] for seed in PIPELINE_NOISE}
    assert len(accuracies) > 1

    document = stdout_json(first_json)
    assert document["overall"]["n"] == 6
    assert -1.0 <= document["overall"]["rho"] <= 1.0
    assert set(document["per_method"]) == {"msp", "mls"}
    assert "…" not in first_table.stdout
    with open(first / "summaries.csv", encoding="utf-8", newline="") as stream:
        assert [row.run_id for row in parse_summaries(stream)] == [
            f"{rule}-{seed}" for seed in PIPELINE_NOISE for rule in ("msp", "mls")
        ]
