import logging
from dataclasses import replace

import numpy as np
import pytest

from osreval.errors import DataValidationError
from osreval.metrics import auroc
from osreval.scoring import ScoreRule, score_run
from osreval.synth import NORM_FLOOR, SynthConfig, class_directions, generate_run

from .utils import run_text


def rule_auroc(run, rule):
    scores = score_run(run, rule).scores
    return auroc(scores[run.known_mask], scores[run.unknown_mask])


def test_default_run_layout():
    cfg = SynthConfig()
    run = generate_run(cfg)
    assert run.num_samples == 6 * 100 + 400
    assert run.num_classes == 6
    assert run.feature_dim == 2
    assert run.labels[:100].tolist() == [0] * 100
    assert run.labels[-400:].tolist() == [-1] * 400
    assert run.sample_ids[0] == "known-0-0"
    assert run.sample_ids[599] == "known-5-99"
    assert run.sample_ids[600] == "unknown-0"


def test_default_run_shows_norm_gap():
    run = generate_run(SynthConfig())
    msp, mls, norm = (rule_auroc(run, rule) for rule in ScoreRule)
    assert mls - msp >= 0.02
    assert norm > 0.9


def test_logits_are_dot_products_with_directions():
    cfg = SynthConfig(num_classes=4, feature_dim=5, seed=3)
    run = generate_run(cfg)
    directions = np.linalg.lstsq(run.features, run.logits, rcond=None)[0].T
    assert np.allclose(np.linalg.norm(directions, axis=1), 1.0)
    assert np.allclose(run.features @ directions.T, run.logits)


def test_without_norm_noise_norms_equal_means():
    run = generate_run(SynthConfig(norm_noise=0.0))
    norms = np.linalg.norm(run.features, axis=1)
    assert np.allclose(norms[run.known_mask], 8.0, atol=1e-12)
    assert np.allclose(norms[run.unknown_mask], 3.0, atol=1e-12)


def test_noiseless_separated_norms_give_perfect_norm_auroc():
    run = generate_run(SynthConfig(angular_noise=0.0, norm_noise=0.0, known_norm_mean=10.0, unknown_norm_mean=1.0))
    assert rule_auroc(run, ScoreRule.FEATURE_NORM) == 1.0
    assert rule_auroc(run, ScoreRule.MLS) == 1.0


def test_equal_norm_means_without_noise_leave_no_norm_gap():
    run = generate_run(SynthConfig(angular_noise=0.0, norm_noise=0.0, known_norm_mean=4.0, unknown_norm_mean=4.0))
    norms = np.linalg.norm(run.features, axis=1)
    assert np.ptp(norms) < 1e-12
    # Known samples sit on their class direction, so only the angle separates them.
    assert np.allclose(score_run(run, "mls").scores[run.known_mask], 4.0)


def test_joint_norm_scaling_keeps_norm_auroc():
    base = SynthConfig(seed=5)
    scaled = replace(base, known_norm_mean=20.0, unknown_norm_mean=7.5, norm_noise=1.25)
    assert rule_auroc(generate_run(scaled), "norm") == pytest.approx(rule_auroc(generate_run(base), "norm"), abs=1e-12)


def test_generation_is_deterministic():
    cfg = SynthConfig(seed=42, num_classes=3, samples_per_known_class=10, num_unknown_samples=20)
    assert run_text(generate_run(cfg)) == run_text(generate_run(cfg))
    assert run_text(generate_run(replace(cfg, seed=43))) != run_text(generate_run(cfg))


def test_planar_directions_are_evenly_spaced():
    cfg = SynthConfig(num_classes=5)
    directions = class_directions(cfg, np.random.default_rng(0))
    gram = directions @ directions.T
    assert np.allclose(np.diag(gram), 1.0)
    assert np.allclose(np.diag(gram, k=1), np.cos(2 * np.pi / 5))


def test_directions_orthonormal_when_dimension_allows():
    cfg = SynthConfig(num_classes=4, feature_dim=8)
    directions = class_directions(cfg, np.random.default_rng(1))
    assert directions.shape == (4, 8)
    assert np.allclose(directions @ directions.T, np.eye(4), atol=1e-12)


def test_directions_unit_when_classes_outnumber_dimensions():
    cfg = SynthConfig(num_classes=6, feature_dim=3)
    directions = class_directions(cfg, np.random.default_rng(2))
    assert directions.shape == (6, 3)
    assert np.allclose(np.linalg.norm(directions, axis=1), 1.0)


def test_clamped_norms_are_logged(caplog):
    cfg = SynthConfig(unknown_norm_mean=0.1, norm_noise=1.0, num_unknown_samples=50)
    with caplog.at_level(logging.WARNING, logger="osreval"):
        run = generate_run(cfg)
    assert "Clamped" in caplog.text
    assert np.linalg.norm(run.features, axis=1).min() >= NORM_FLOOR * (1 - 1e-9)


@pytest.mark.parametrize(
    "overrides,message",
    [
        ({"num_classes": 1}, "num_classes"),
        ({"feature_dim": 1}, "feature_dim"),
        ({"samples_per_known_class": 0}, "samples_per_known_class"),
        ({"num_unknown_samples": 0}, "num_unknown_samples"),
        ({"known_norm_mean": 0.0}, "known_norm_mean"),
        ({"angular_noise": -0.1}, "angular_noise"),
        ({"norm_noise": float("inf")}, "norm_noise must be finite"),
    ],
)
def test_config_validation(overrides, message):
    with pytest.raises(DataValidationError, match=message):
        SynthConfig(**overrides)
