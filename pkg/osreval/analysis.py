import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt

from .errors import DataValidationError, UndefinedMetricError

logger = logging.getLogger(__name__)

METRICS = ("accuracy", "auroc", "oscr", "ap")


@dataclass(frozen=True)
class RunSummary:
    """Headline metrics of one evaluated run."""

    run_id: str
    method: str
    dataset: str
    accuracy: float
    auroc: float
    oscr: float
    ap: float

    def __post_init__(self) -> None:
        for name in METRICS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DataValidationError(f"{name} of run {self.run_id!r} outside [0, 1]")


class GroupBy(str, Enum):
    METHOD = "method"
    DATASET = "dataset"


@dataclass(frozen=True)
class GroupStats:
    group: str
    count: int
    mean: dict[str, float]
    std: dict[str, float]


@dataclass(frozen=True)
class CorrelationReport:
    """Pearson rho between accuracy and AUROC, overall and per method."""

    overall: float
    count: int
    per_method: dict[str, float | None]
    method_counts: dict[str, int]


def _check_unique(summaries: Sequence[RunSummary]) -> None:
    seen = set()
    for summary in summaries:
        if summary.run_id in seen:
            raise DataValidationError(f"duplicate run_id {summary.run_id!r}")
        seen.add(summary.run_id)


def pearson(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """
    Product-moment correlation, clamped to [-1, 1].

    :raises UndefinedMetricError: Fewer than two points, unequal lengths or a
        constant series.
    """
    xs = np.asarray(x, dtype=np.float64).ravel()
    ys = np.asarray(y, dtype=np.float64).ravel()
    if xs.size != ys.size:
        raise UndefinedMetricError("correlation needs series of equal length")
    if xs.size < 2:
        raise UndefinedMetricError("correlation needs at least 2 points")
    if np.all(xs == xs[0]) or np.all(ys == ys[0]):
        raise UndefinedMetricError("correlation undefined for constant series")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    # One square root of the product keeps rho(x, x) at exactly 1.
    rho = float(np.sum(dx * dy) / np.sqrt(np.sum(dx * dx) * np.sum(dy * dy)))
    return min(1.0, max(-1.0, rho))


def aggregate(summaries: Sequence[RunSummary], group_by: GroupBy | str) -> list[GroupStats]:
    """Per-group mean and population standard deviation of every metric, groups sorted by name."""
    try:
        key = GroupBy(group_by)
    except ValueError:
        raise UndefinedMetricError(f"cannot group by {group_by!r}, expected method or dataset")
    if not summaries:
        raise UndefinedMetricError("nothing to aggregate")
    _check_unique(summaries)
    groups: dict[str, list[RunSummary]] = {}
    for summary in summaries:
        groups.setdefault(getattr(summary, key.value), []).append(summary)
    stats = []
    for name in sorted(groups):
        members = sorted(groups[name], key=lambda s: s.run_id)
        table = np.array([[getattr(s, metric) for metric in METRICS] for s in members])
        means, stds = table.mean(axis=0), table.std(axis=0)
        stats.append(
            GroupStats(
                group=name,
                count=len(members),
                mean={metric: float(means[i]) for i, metric in enumerate(METRICS)},
                std={metric: float(stds[i]) for i, metric in enumerate(METRICS)},
            )
        )
    return stats


def correlation_report(summaries: Sequence[RunSummary]) -> CorrelationReport:
    _check_unique(summaries)
    if len(summaries) < 2:
        raise UndefinedMetricError("correlation needs at least 2 summaries")
    overall = pearson([s.accuracy for s in summaries], [s.auroc for s in summaries])
    by_method: dict[str, list[RunSummary]] = {}
    for summary in summaries:
        by_method.setdefault(summary.method, []).append(summary)
    per_method: dict[str, float | None] = {}
    for method in sorted(by_method):
        members = by_method[method]
        try:
            per_method[method] = pearson([s.accuracy for s in members], [s.auroc for s in members])
        except UndefinedMetricError as error:
            logger.warning("Skipping correlation for method %s: %s", method, error)
            per_method[method] = None
    return CorrelationReport(
        overall=overall,
        count=len(summaries),
        per_method=per_method,
        method_counts={method: len(by_method[method]) for method in sorted(by_method)},
    )
