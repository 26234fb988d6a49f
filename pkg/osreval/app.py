import io
import logging
import sys
from collections.abc import Callable
from enum import Enum
from pathlib import Path
from typing import Any, TextIO, TypeVar

import click
import typer
from click import BadParameter
from typer.core import TyperGroup

from osreval.analysis import GroupBy, RunSummary, aggregate, correlation_report
from osreval.errors import DataValidationError, OsrError, UndefinedMetricError
from osreval.metrics import evaluate
from osreval.printer import JsonPrinter, Printer, TablePrinter, split_summary
from osreval.runio import (
    HierarchyScheme,
    SplitSpec,
    parse_attribute_matrix,
    parse_hierarchy_table,
    parse_run,
    parse_semantic_tree,
    parse_summaries,
    write_report,
    write_run,
    write_scores,
    write_split,
    write_summaries,
)
from osreval.scoring import ScoreRule, score_run
from osreval.splits import BinRule, hierarchy_splits, search_attribute_splits, tree_splits
from osreval.synth import SynthConfig, generate_run
from osreval.utils import configure_logging, get_osreval_version, notice

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Recent typer releases raise usage errors from a bundled click whose
# exceptions do not derive from the installed `click.ClickException`.
USAGE_ERRORS: tuple[type[Exception], ...] = tuple(
    {click.ClickException, *(base for base in typer.BadParameter.__mro__ if base.__name__ == "ClickException")}
)
ABORTS: tuple[type[BaseException], ...] = tuple({click.exceptions.Abort, typer.Abort})


class OsrGroup(TyperGroup):
    """Maps every failure onto the documented exit codes."""

    def main(self, *args: Any, **kwargs: Any) -> Any:
        kwargs["standalone_mode"] = False
        try:
            result = super().main(*args, **kwargs)
        except USAGE_ERRORS as error:
            error.show()  # type: ignore[attr-defined]
            sys.exit(EXIT_USAGE)
        except ABORTS:
            typer.echo("Aborted!", err=True)
            sys.exit(EXIT_USAGE)
        except OsrError as error:
            typer.secho(f"Error: {error}", fg="red", err=True)
            sys.exit(EXIT_DATA)
        except Exception:
            logger.exception("Internal error")
            sys.exit(EXIT_INTERNAL)
        sys.exit(result if isinstance(result, int) else 0)


app = typer.Typer(
    cls=OsrGroup,
    add_completion=False,
    no_args_is_help=True,
    help="Open-set recognition evaluation: scores, metrics, class splits and synthetic runs.",
)


class RuleName(str, Enum):
    MSP = "msp"
    MLS = "mls"
    NORM = "norm"


class Binning(str, Enum):
    RANK = "rank"
    WIDTH = "width"


def _load(path: Path, parser: Callable[[TextIO], T]) -> T:
    try:
        with open(path, encoding="utf-8", newline="") as stream:
            return parser(stream)
    except UnicodeDecodeError:
        raise DataValidationError(f"{path} is not UTF-8 text")
    except OSError as error:
        raise click.FileError(str(path), hint=error.strerror)


def _emit(output: Path | None, write: Callable[[TextIO], None]) -> None:
    if output is None:
        buffer = io.StringIO()
        write(buffer)
        typer.echo(buffer.getvalue(), nl=False)
        return
    try:
        with open(output, "w", encoding="utf-8", newline="") as stream:
            write(stream)
    except OSError as error:
        raise click.FileError(str(output), hint=error.strerror)


def _class_list(stream: TextIO) -> list[str]:
    names: list[str] = []
    for line_number, line in enumerate(stream, start=1):
        name = line.strip()
        if not name:
            continue
        if name in names:
            raise DataValidationError(f'duplicate class name "{name}"', row=line_number)
        names.append(name)
    return names


def _finish_split(split: SplitSpec, output: Path | None, summary: bool) -> None:
    _emit(output, lambda stream: write_split(split, stream))
    if summary:
        split_summary(split)


run_argument = typer.Argument(
    ...,
    exists=True,
    dir_okay=False,
    show_default=False,
    help="Run file: sample_id,label,logit_*[,feat_*].",
)
rule_option = typer.Option(RuleName.MLS, "--rule", "-r", case_sensitive=False, help="Open-set scoring rule.")
output_option = typer.Option(None, "--output", "-o", dir_okay=False, help="Write here instead of stdout.")
summary_option = typer.Option(False, "--summary", help="Print class counts per bin on stderr.")


@app.callback()
def main(
    version: bool = typer.Option(
        False,
        "--version",
        help="Show version.",
        callback=get_osreval_version,
        is_eager=True,
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log progress on stderr."),
) -> None:
    configure_logging(verbose)


@app.command()
def score(
    run_file: Path = run_argument,
    rule: RuleName = rule_option,
    output: Path | None = output_option,
) -> None:
    """Export per-sample scores and predictions as CSV."""
    run = _load(run_file, parse_run)
    scores = score_run(run, ScoreRule.from_cli(rule.value))
    _emit(output, lambda stream: write_scores(run, scores, stream))


@app.command("eval")
def evaluate_run(
    run_file: Path = run_argument,
    rule: RuleName = rule_option,
    num_unknown_classes: int = typer.Option(
        0, min=0, help="Number of unknown classes, used for openness only."
    ),
    curves: bool = typer.Option(False, "--curves", help="Attach ROC and OSCR curve points."),
    output: Path | None = output_option,
    append_summary: Path | None = typer.Option(
        None,
        dir_okay=False,
        help="Append a run_id,method,dataset,... row to this summary CSV.",
        rich_help_panel="Summary Options",
    ),
    run_id: str | None = typer.Option(None, help="Summary run id.", rich_help_panel="Summary Options"),
    method: str | None = typer.Option(
        None, help="Summary method name [default: rule name].", rich_help_panel="Summary Options"
    ),
    dataset: str | None = typer.Option(
        None, help="Summary dataset name [default: run file stem].", rich_help_panel="Summary Options"
    ),
) -> None:
    """Compute accuracy, AUROC, OSCR, AP and openness for one rule."""
    if append_summary is not None and not run_id:
        raise BadParameter("--append-summary needs --run-id.", param_hint="--run-id")
    run = _load(run_file, parse_run)
    report = evaluate(run, ScoreRule.from_cli(rule.value), num_unknown_classes, curves)
    _emit(output, lambda stream: write_report(report, stream))

    if append_summary is None:
        return
    if report.auroc is None or report.oscr is None or report.ap is None:
        raise UndefinedMetricError("cannot append a summary row without unknown samples")
    is_new = not append_summary.is_file() or append_summary.stat().st_size == 0
    existing = [] if is_new else _load(append_summary, parse_summaries)
    if any(row.run_id == run_id for row in existing):
        raise DataValidationError(f"run_id {run_id!r} already present in {append_summary}")
    summary = RunSummary(
        run_id=str(run_id),
        method=method or rule.value,
        dataset=dataset or run_file.stem,
        accuracy=report.accuracy,
        auroc=report.auroc,
        oscr=report.oscr,
        ap=report.ap,
    )
    with open(append_summary, "a", encoding="utf-8", newline="") as stream:
        write_summaries([summary], stream, header=is_new)
    notice(f"Appended {summary.run_id} to {append_summary}")


@app.command()
def compare(
    run_file: Path = run_argument,
    num_unknown_classes: int = typer.Option(0, min=0, help="Number of unknown classes, used for openness only."),
    as_json: bool = typer.Option(False, "--json", help="Print JSON instead of a table."),
) -> None:
    """Evaluate every applicable rule on one run side by side."""
    run = _load(run_file, parse_run)
    reports = [
        evaluate(run, rule, num_unknown_classes)
        for rule in ScoreRule
        if rule.applies_to(run)
    ]
    printer: Printer = JsonPrinter() if as_json else TablePrinter()
    printer.reports(reports)


@app.command("splits-attr")
def splits_attr(
    matrix: Path = typer.Option(..., exists=True, dir_okay=False, help="Attribute matrix CSV."),
    num_known: int = typer.Option(..., min=1, help="Known classes per sampled split."),
    samples: int = typer.Option(..., min=1, help="Number of sampled known-class subsets."),
    seed: int = typer.Option(..., help="PRNG seed."),
    binning: Binning = typer.Option(Binning.RANK, case_sensitive=False, help="Bin by rank thirds or value width."),
    workers: int | None = typer.Option(None, min=1, help="Scoring threads [default: SEARCH_WORKERS]."),
    output: Path | None = output_option,
    summary: bool = summary_option,
) -> None:
    """Search attribute-similarity splits."""
    attributes = _load(matrix, parse_attribute_matrix)
    if num_known >= len(attributes.class_names):
        raise BadParameter(
            f"must be below the number of classes ({len(attributes.class_names)}).",
            param_hint="--num-known",
        )
    split = search_attribute_splits(
        attributes,
        num_known=num_known,
        num_samples=samples,
        seed=seed,
        rule=BinRule(binning.value),
        workers=workers,
    )
    _finish_split(split, output, summary)


@app.command("splits-hier")
def splits_hier(
    table: Path = typer.Option(..., exists=True, dir_okay=False, help="Hierarchy table CSV."),
    scheme: HierarchyScheme = typer.Option(..., case_sensitive=False, help="Level layout of the table."),
    known: Path = typer.Option(..., exists=True, dir_okay=False, help="Known class names, one per line."),
    output: Path | None = output_option,
    summary: bool = summary_option,
) -> None:
    """Bin open classes by the name hierarchy they share with known classes."""
    hierarchy = _load(table, lambda stream: parse_hierarchy_table(stream, scheme))
    split = hierarchy_splits(hierarchy, _load(known, _class_list), scheme)
    _finish_split(split, output, summary)


@app.command("splits-tree")
def splits_tree(
    tree: Path = typer.Option(..., exists=True, dir_okay=False, help="Semantic tree JSON."),
    known: Path = typer.Option(..., exists=True, dir_okay=False, help="Known class names, one per line."),
    num_easy: int = typer.Option(..., min=0, help="Open classes farthest from the known set."),
    num_hard: int = typer.Option(..., min=0, help="Open classes closest to the known set."),
    output: Path | None = output_option,
    summary: bool = summary_option,
) -> None:
    """Pick easy and hard open classes by total tree distance."""
    semantic_tree = _load(tree, parse_semantic_tree)
    split = tree_splits(semantic_tree, _load(known, _class_list), num_easy, num_hard)
    _finish_split(split, output, summary)


@app.command()
def correlate(
    summaries: Path = typer.Argument(..., exists=True, dir_okay=False, help="Summary CSV."),
    group_by: GroupBy = typer.Option(GroupBy.METHOD, case_sensitive=False, help="Aggregation key."),
    as_json: bool = typer.Option(False, "--json", help="Print JSON instead of tables."),
) -> None:
    """Correlate closed-set accuracy with AUROC across runs."""
    rows = _load(summaries, parse_summaries)
    report = correlation_report(rows)
    groups = aggregate(rows, group_by)
    printer: Printer = JsonPrinter() if as_json else TablePrinter()
    printer.correlation(report, groups, group_by.value)


defaults = SynthConfig()


@app.command()
def synth(
    seed: int = typer.Option(..., help="PRNG seed."),
    num_classes: int = typer.Option(defaults.num_classes, min=2, help="Known classes."),
    feature_dim: int = typer.Option(defaults.feature_dim, min=2, help="Feature dimensions."),
    samples_per_class: int = typer.Option(defaults.samples_per_known_class, min=1, help="Samples per known class."),
    num_unknown: int = typer.Option(defaults.num_unknown_samples, min=1, help="Unknown samples."),
    known_norm: float = typer.Option(defaults.known_norm_mean, min=0.0, help="Mean known feature norm."),
    unknown_norm: float = typer.Option(defaults.unknown_norm_mean, min=0.0, help="Mean unknown feature norm."),
    angular_noise: float = typer.Option(defaults.angular_noise, min=0.0, help="Direction noise."),
    norm_noise: float = typer.Option(defaults.norm_noise, min=0.0, help="Norm noise."),
    output: Path | None = output_option,
) -> None:
    """Generate a synthetic run with a known/unknown feature-norm gap."""
    config = SynthConfig(
        num_classes=num_classes,
        feature_dim=feature_dim,
        samples_per_known_class=samples_per_class,
        num_unknown_samples=num_unknown,
        known_norm_mean=known_norm,
        unknown_norm_mean=unknown_norm,
        angular_noise=angular_noise,
        norm_noise=norm_noise,
        seed=seed,
    )
    run = generate_run(config)
    _emit(output, lambda stream: write_run(run, stream))


def entry_point() -> None:
    app()


if __name__ == "__main__":
    entry_point()
