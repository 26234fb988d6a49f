import io
import json
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from typer.testing import CliRunner

from osreval.app import app
from osreval.runio import EvaluationRun, write_run

runner = CliRunner()

__all__ = ["app", "runner", "cmd_args", "make_run", "run_text", "write_run_file", "stdout_json"]


def cmd_args(command: str, *positional: Any, **kwargs: Any) -> list[str]:
    arguments = [command, *(str(value) for value in positional)]
    for key, value in kwargs.items():
        arguments.append(key)
        if isinstance(value, bool):
            continue
        arguments.append(str(value))
    return arguments


def make_run(
    logits: Sequence[Sequence[float]],
    labels: Sequence[int] | None = None,
    features: Sequence[Sequence[float]] | None = None,
) -> EvaluationRun:
    logits = np.asarray(logits, dtype=np.float64)
    if labels is None:
        labels = np.argmax(logits, axis=1)
    return EvaluationRun(
        sample_ids=tuple(f"s{i}" for i in range(len(logits))),
        labels=np.asarray(labels),
        logits=logits,
        features=None if features is None else np.asarray(features, dtype=np.float64),
    )


def run_text(run: EvaluationRun) -> str:
    buffer = io.StringIO()
    write_run(run, buffer)
    return buffer.getvalue()


def write_run_file(path: Path, run: EvaluationRun) -> Path:
    path.write_text(run_text(run), encoding="utf-8")
    return path


def stdout_json(result: Any) -> Any:
    return json.loads(result.stdout)
