import logging
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt
from click import BadParameter
from scipy.special import softmax as _softmax

from .errors import FeatureRequiredError
from .runio import EvaluationRun

logger = logging.getLogger(__name__)


class ScoreRule(str, Enum):
    MSP = "msp"
    MLS = "mls"
    FEATURE_NORM = "feature_norm"

    @classmethod
    def from_cli(cls, name: str) -> "ScoreRule":
        """Resolves a command line rule name; ``norm`` is accepted for ``feature_norm``."""
        name = name.strip().lower()
        if name == "norm":
            return cls.FEATURE_NORM
        try:
            return cls(name)
        except ValueError:
            raise BadParameter(f'Unknown rule "{name}", expected one of msp, mls, norm.')

    @property
    def cli_name(self) -> str:
        return "norm" if self is ScoreRule.FEATURE_NORM else self.value

    def get_scorer(self) -> Callable[[EvaluationRun], "ScoreVector"]:
        return _SCORERS[self]

    def applies_to(self, run: EvaluationRun) -> bool:
        return self is not ScoreRule.FEATURE_NORM or run.features is not None


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Per-sample open-set scores under one rule, higher meaning more known."""

    rule: ScoreRule
    scores: np.ndarray
    predictions: np.ndarray

    def __post_init__(self) -> None:
        scores = np.array(self.scores, dtype=np.float64)
        predictions = np.array(self.predictions, dtype=np.int64)
        if scores.shape != predictions.shape or scores.ndim != 1:
            raise ValueError("scores and predictions must be aligned vectors")
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        scores.setflags(write=False)
        predictions.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "predictions", predictions)

    def __len__(self) -> int:
        return int(self.scores.shape[0])


def softmax(logits: npt.ArrayLike) -> np.ndarray:
    """
    Probability vector of a logit vector (or of each row of a matrix).

    Shift-stable: scipy subtracts the maximum before exponentiating.
    """
    return np.asarray(_softmax(np.asarray(logits, dtype=np.float64), axis=-1))


def predictions(run: EvaluationRun) -> np.ndarray:
    # np.argmax returns the first maximal index, i.e. the lowest class on ties.
    return np.argmax(run.logits, axis=1).astype(np.int64)


def msp_scores(run: EvaluationRun) -> ScoreVector:
    probabilities = softmax(run.logits)
    return ScoreVector(ScoreRule.MSP, probabilities.max(axis=1), predictions(run))


def mls_scores(run: EvaluationRun) -> ScoreVector:
    return ScoreVector(ScoreRule.MLS, run.logits.max(axis=1), predictions(run))


def feature_norm_scores(run: EvaluationRun) -> ScoreVector:
    """
    Euclidean norm of each feature vector. Predictions still come from the
    logits.

    :raises FeatureRequiredError: The run carries no features.
    """
    if run.features is None:
        raise FeatureRequiredError()
    return ScoreVector(ScoreRule.FEATURE_NORM, np.linalg.norm(run.features, axis=1), predictions(run))


_SCORERS: dict[ScoreRule, Callable[[EvaluationRun], ScoreVector]] = {
    ScoreRule.MSP: msp_scores,
    ScoreRule.MLS: mls_scores,
    ScoreRule.FEATURE_NORM: feature_norm_scores,
}


def score_run(run: EvaluationRun, rule: ScoreRule | str) -> ScoreVector:
    rule = rule if isinstance(rule, ScoreRule) else ScoreRule.from_cli(rule)
    scores = rule.get_scorer()(run)
    logger.info("Scored %d samples with %s", len(scores), rule.value)
    return scores
