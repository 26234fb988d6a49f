"""
Closed-set accuracy and the open-set metrics: AUROC, OSCR, AP and openness.

Scores are "knownness": higher means more likely to belong to a known
class. AUROC and OSCR treat known samples as positives, AP treats unknown
samples as positives and retrieves the lowest scores first. Ties are always
resolved exactly, never by input order.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt
from scipy.stats import rankdata

from .errors import UndefinedMetricError
from .runio import EvaluationRun, MetricsReport
from .scoring import ScoreRule, ScoreVector, score_run

logger = logging.getLogger(__name__)


class CurveKind(str, Enum):
    ROC = "roc"
    OSCR = "oscr"


@dataclass(frozen=True)
class CurvePoints:
    """A curve from x=0 to x=1, sorted nondecreasing in x."""

    kind: CurveKind
    points: tuple[tuple[float, float], ...]

    def area(self) -> float:
        if len(self.points) < 2:
            return 0.0
        xs, ys = np.array(self.points, dtype=np.float64).T
        return float(np.sum(np.diff(xs) * (ys[1:] + ys[:-1]) / 2.0))


def _vector(values: npt.ArrayLike, side: str, metric: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64).ravel()
    if array.size == 0:
        raise UndefinedMetricError(f"{metric} undefined: no {side} samples")
    if not np.all(np.isfinite(array)):
        raise UndefinedMetricError(f"{metric} undefined: non-finite {side} score")
    return array


def _count_at_least(sorted_values: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    return sorted_values.size - np.searchsorted(sorted_values, thresholds, side="left")


def _thresholds(*score_sets: np.ndarray) -> np.ndarray:
    # Distinct observed scores, descending, led by +inf where nothing is accepted.
    distinct = np.unique(np.concatenate(score_sets))[::-1]
    return np.concatenate(([np.inf], distinct))


def accuracy(run: EvaluationRun, predictions: npt.ArrayLike) -> float:
    """Top-1 accuracy over known samples; unknown samples are ignored."""
    known = run.known_mask
    if not np.any(known):
        raise UndefinedMetricError("accuracy undefined without known samples")
    predicted = np.asarray(predictions)[known]
    return float(np.mean(predicted == run.labels[known]))


def auroc(known_scores: npt.ArrayLike, unknown_scores: npt.ArrayLike) -> float:
    """
    Mann-Whitney estimate of P(known score > unknown score), ties counted as
    one half, computed from average ranks.
    """
    known = _vector(known_scores, "known", "AUROC")
    unknown = _vector(unknown_scores, "unknown", "AUROC")
    n, m = known.size, unknown.size
    ranks = rankdata(np.concatenate((known, unknown)), method="average")
    wins = float(np.sum(ranks[:n])) - n * (n + 1) / 2.0
    return min(1.0, max(0.0, wins / (n * m)))


def roc_curve(known_scores: npt.ArrayLike, unknown_scores: npt.ArrayLike) -> CurvePoints:
    """(FPR, TPR) at +inf and at every distinct score, from (0, 0) to (1, 1)."""
    known = np.sort(_vector(known_scores, "known", "AUROC"))
    unknown = np.sort(_vector(unknown_scores, "unknown", "AUROC"))
    thresholds = _thresholds(known, unknown)
    tpr = _count_at_least(known, thresholds) / known.size
    fpr = _count_at_least(unknown, thresholds) / unknown.size
    return CurvePoints(CurveKind.ROC, tuple(zip(fpr.tolist(), tpr.tolist())))


def oscr(run: EvaluationRun, scores: ScoreVector) -> tuple[float, CurvePoints]:
    """
    Area under correct classification rate against false positive rate as
    the score threshold sweeps from +inf down to the smallest score.

    :return: Trapezoidal area and the curve it was integrated over.
    """
    known_mask, unknown_mask = run.known_mask, run.unknown_mask
    if not np.any(known_mask):
        raise UndefinedMetricError("OSCR undefined: no known samples")
    if not np.any(unknown_mask):
        raise UndefinedMetricError("OSCR undefined: no unknown samples")
    known = scores.scores[known_mask]
    unknown = np.sort(scores.scores[unknown_mask])
    correct = np.sort(known[scores.predictions[known_mask] == run.labels[known_mask]])
    thresholds = _thresholds(known, unknown)
    ccr = _count_at_least(correct, thresholds) / known.size
    fpr = _count_at_least(unknown, thresholds) / unknown.size
    curve = CurvePoints(CurveKind.OSCR, tuple(zip(fpr.tolist(), ccr.tolist())))
    return min(1.0, max(0.0, curve.area())), curve


def average_precision(known_scores: npt.ArrayLike, unknown_scores: npt.ArrayLike) -> float:
    """
    Non-interpolated AP for retrieving unknown samples, lowest score first.

    A block of tied scores contributes its expected precision sum over every
    ordering of the block. For a block of ``n`` items holding ``p`` positives,
    entered after ``r`` items of which ``h`` were positives, slot ``j`` is a
    positive with probability ``p / n`` and then sees on average
    ``(j - 1)(p - 1)/(n - 1)`` block positives ahead of it.
    """
    known = _vector(known_scores, "known", "AP")
    unknown = _vector(unknown_scores, "unknown", "AP")
    values, inverse = np.unique(np.concatenate((known, unknown)), return_inverse=True)
    block_sizes = np.bincount(inverse, minlength=values.size)
    block_positives = np.bincount(inverse[known.size :], minlength=values.size)

    total = 0.0
    retrieved = 0
    hits = 0
    for n, p in zip(block_sizes.tolist(), block_positives.tolist()):
        if p:
            slots = np.arange(1, n + 1, dtype=np.float64)
            ahead = (slots - 1) * (p - 1) / (n - 1) if n > 1 else np.zeros(1)
            total += (p / n) * float(np.sum((hits + 1 + ahead) / (retrieved + slots)))
        retrieved += n
        hits += p
    return min(1.0, max(0.0, total / unknown.size))


def openness(num_known_classes: int, num_unknown_classes: int) -> float:
    """
    Openness with training classes equal to target classes: ``K`` known and
    ``K + U`` test classes give ``1 - sqrt(2K / (2K + U))``.
    """
    if num_known_classes < 1:
        raise UndefinedMetricError("openness needs at least one known class")
    if num_unknown_classes < 0:
        raise UndefinedMetricError("number of unknown classes must be nonnegative")
    k = num_known_classes
    return 1.0 - math.sqrt(2 * k / (2 * k + num_unknown_classes))


def evaluate(
    run: EvaluationRun,
    rule: ScoreRule | str,
    num_unknown_classes: int = 0,
    curves: bool = False,
) -> MetricsReport:
    """
    Scores a run under one rule and computes every metric.

    Without unknown samples the open-set metrics are reported as ``None``
    and a warning is logged; accuracy is always computed.

    :param run: Parsed evaluation run.
    :param rule: Scoring rule, enum member or command line name.
    :param num_unknown_classes: Unknown class count for openness.
    :param curves: Attach ROC and OSCR curve points.
    """
    scores = score_run(run, rule)
    acc = accuracy(run, scores.predictions)
    known = scores.scores[run.known_mask]
    unknown = scores.scores[run.unknown_mask]
    auroc_value = oscr_value = ap_value = None
    roc_points = oscr_points = None
    if unknown.size == 0:
        logger.warning("Run has no unknown samples: AUROC, OSCR and AP are undefined")
    else:
        auroc_value = auroc(known, unknown)
        oscr_value, oscr_curve = oscr(run, scores)
        ap_value = average_precision(known, unknown)
        if curves:
            roc_points = roc_curve(known, unknown).points
            oscr_points = oscr_curve.points
    return MetricsReport(
        rule=scores.rule.value,
        accuracy=acc,
        auroc=auroc_value,
        oscr=oscr_value,
        ap=ap_value,
        openness=openness(run.num_classes, num_unknown_classes),
        roc_points=roc_points,
        oscr_points=oscr_points,
    )
