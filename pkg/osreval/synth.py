"""
Synthetic runs with a feature-norm gap between known and unknown samples.

Known samples lie along their class direction with large norms, unknown
samples point anywhere with small norms, and logits are plain dot products
with the class directions. The max logit keeps the norm gap; the softmax
largely normalises it away.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError
from .runio import UNKNOWN_LABEL, EvaluationRun

logger = logging.getLogger(__name__)

NORM_FLOOR = 1e-6


@dataclass(frozen=True)
class SynthConfig:
    num_classes: int = 6
    feature_dim: int = 2
    samples_per_known_class: int = 100
    num_unknown_samples: int = 400
    known_norm_mean: float = 8.0
    unknown_norm_mean: float = 3.0
    angular_noise: float = 0.4
    norm_noise: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        checks = (
            (self.num_classes >= 2, "num_classes must be at least 2"),
            (self.feature_dim >= 2, "feature_dim must be at least 2"),
            (self.samples_per_known_class >= 1, "samples_per_known_class must be positive"),
            (self.num_unknown_samples >= 1, "num_unknown_samples must be positive"),
            (self.known_norm_mean > 0, "known_norm_mean must be positive"),
            (self.unknown_norm_mean > 0, "unknown_norm_mean must be positive"),
            (self.angular_noise >= 0, "angular_noise must be nonnegative"),
            (self.norm_noise >= 0, "norm_noise must be nonnegative"),
        )
        for valid, message in checks:
            if not valid:
                raise DataValidationError(message)
        for name in ("known_norm_mean", "unknown_norm_mean", "angular_noise", "norm_noise"):
            if not math.isfinite(getattr(self, name)):
                raise DataValidationError(f"{name} must be finite")


def _normalize(vectors: np.ndarray) -> np.ndarray:
    return vectors / np.linalg.norm(vectors, axis=-1, keepdims=True)


def class_directions(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Unit class directions, one row per class.

    Two dimensions get evenly spaced angles with a random offset; with at
    least as many dimensions as classes the directions are an orthonormal
    basis from a QR decomposition; otherwise they are normalised Gaussians.
    """
    c, d = cfg.num_classes, cfg.feature_dim
    if d == 2:
        angles = rng.uniform(0.0, 2.0 * np.pi) + 2.0 * np.pi * np.arange(c) / c
        return np.stack((np.cos(angles), np.sin(angles)), axis=1)
    if d >= c:
        q, r = np.linalg.qr(rng.standard_normal((d, c)))
        # Sign fix makes the basis a deterministic function of the draw.
        return (q * np.sign(np.diag(r))).T
    return _normalize(rng.standard_normal((c, d)))


def _norms(mean: float, noise: float, rng: np.random.Generator, count: int) -> tuple[np.ndarray, int]:
    norms = mean + noise * rng.standard_normal(count)
    clamped = int(np.count_nonzero(norms < NORM_FLOOR))
    return np.maximum(norms, NORM_FLOOR), clamped


def generate_run(cfg: SynthConfig) -> EvaluationRun:
    """
    Builds a run: ``n`` known samples per class in class order, then ``m``
    unknown samples. Directions, known samples and unknown samples use three
    independent streams spawned from ``SeedSequence(seed)``.
    """
    direction_seed, known_seed, unknown_seed = np.random.SeedSequence(cfg.seed).spawn(3)
    directions = class_directions(cfg, np.random.default_rng(direction_seed))

    n, m, d = cfg.samples_per_known_class, cfg.num_unknown_samples, cfg.feature_dim
    known_labels = np.repeat(np.arange(cfg.num_classes), n)
    known_rng = np.random.default_rng(known_seed)
    noise = known_rng.standard_normal((known_labels.size, d))
    perturbed = _normalize(directions[known_labels] + cfg.angular_noise * noise)
    known_norms, known_clamped = _norms(cfg.known_norm_mean, cfg.norm_noise, known_rng, known_labels.size)

    unknown_rng = np.random.default_rng(unknown_seed)
    unknown_directions = _normalize(unknown_rng.standard_normal((m, d)))
    unknown_norms, unknown_clamped = _norms(cfg.unknown_norm_mean, cfg.norm_noise, unknown_rng, m)

    if known_clamped or unknown_clamped:
        logger.warning(
            "Clamped %d known and %d unknown feature norms to %g",
            known_clamped,
            unknown_clamped,
            NORM_FLOOR,
        )

    features = np.concatenate(
        (perturbed * known_norms[:, None], unknown_directions * unknown_norms[:, None])
    )
    sample_ids = [f"known-{label}-{i % n}" for i, label in enumerate(known_labels.tolist())]
    sample_ids += [f"unknown-{i}" for i in range(m)]
    run = EvaluationRun(
        sample_ids=tuple(sample_ids),
        labels=np.concatenate((known_labels, np.full(m, UNKNOWN_LABEL))),
        logits=features @ directions.T,
        features=features,
    )
    logger.info("Generated %d known and %d unknown samples", known_labels.size, m)
    return run
