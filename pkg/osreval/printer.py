import io
import json
from abc import ABC, abstractmethod
from collections.abc import Sequence
from typing import Any

import rich.box
from click import UsageError
from rich.console import Console
from rich.table import Table
from typer import echo

from .analysis import METRICS, CorrelationReport, GroupStats
from .config import cfg
from .runio import MetricsReport, SplitSpec, write_reports
from .utils import stderr_console


# Tables never expand, so this only keeps rich from shrinking columns.
TABLE_WIDTH = 1024


def _number(value: float | None, digits: int = 4) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


class Printer(ABC):
    @abstractmethod
    def reports(self, reports: Sequence[MetricsReport]) -> None:
        pass

    @abstractmethod
    def correlation(self, report: CorrelationReport, groups: Sequence[GroupStats], group_by: str) -> None:
        pass


class JsonPrinter(Printer):
    """Exact, deterministic JSON on standard output."""

    def reports(self, reports: Sequence[MetricsReport]) -> None:
        buffer = io.StringIO()
        write_reports(reports, buffer)
        echo(buffer.getvalue(), nl=False)

    def correlation(self, report: CorrelationReport, groups: Sequence[GroupStats], group_by: str) -> None:
        document: dict[str, Any] = {
            "overall": {"rho": report.overall, "n": report.count},
            "per_method": {
                method: {"rho": rho, "n": report.method_counts[method]}
                for method, rho in report.per_method.items()
            },
            "group_by": group_by,
            "groups": [
                {"group": stats.group, "count": stats.count, "mean": stats.mean, "std": stats.std}
                for stats in groups
            ],
        }
        echo(json.dumps(document, indent=2, ensure_ascii=False))


class TablePrinter(Printer):
    """Aligned plain-text tables rendered with rich."""

    def __init__(self, console: Console | None = None) -> None:
        self.console = console or Console(highlight=False, width=TABLE_WIDTH)
        style = cfg.get("TABLE_STYLE").upper()
        box = getattr(rich.box, style, None)
        if not isinstance(box, rich.box.Box):
            raise UsageError(f"Unknown TABLE_STYLE {style!r}")
        self.box = box

    def _table(self, *columns: str) -> Table:
        table = Table(box=self.box)
        for i, column in enumerate(columns):
            table.add_column(column, justify="left" if i == 0 else "right", no_wrap=True)
        return table

    def reports(self, reports: Sequence[MetricsReport]) -> None:
        table = self._table("rule", "accuracy", "auroc", "oscr", "ap", "openness")
        for report in reports:
            table.add_row(
                report.rule,
                _number(report.accuracy),
                _number(report.auroc),
                _number(report.oscr),
                _number(report.ap),
                _number(report.openness),
            )
        self.console.print(table)

    def correlation(self, report: CorrelationReport, groups: Sequence[GroupStats], group_by: str) -> None:
        rho = self._table("method", "n", "rho(accuracy, auroc)")
        rho.add_row("overall", str(report.count), _number(report.overall))
        for method, value in report.per_method.items():
            rho.add_row(method, str(report.method_counts[method]), _number(value))
        self.console.print(rho)

        stats = self._table(
            group_by,
            "n",
            *(f"{metric} mean" for metric in METRICS),
            *(f"{metric} std" for metric in METRICS),
        )
        for group in groups:
            stats.add_row(
                group.group,
                str(group.count),
                *(_number(group.mean[metric]) for metric in METRICS),
                *(_number(group.std[metric]) for metric in METRICS),
            )
        self.console.print(stats)

    def split_counts(self, split: SplitSpec) -> None:
        table = self._table("bin", "#classes")
        for name, count in split.counts().items():
            table.add_row(name, str(count))
        table.title = f"{split.scheme.value} split"
        self.console.print(table)


def split_summary(split: SplitSpec) -> None:
    TablePrinter(stderr_console).split_counts(split)
