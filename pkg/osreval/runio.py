"""
Readers and writers for every file the toolkit exchanges.

Runs, attribute matrices, hierarchy tables and summaries are CSV; semantic
trees, split specs and metric reports are JSON. Parsers validate every type
invariant and name the offending row, column or node. Writers are
deterministic: fixed key order and shortest round-trip float formatting.
"""

import csv
import hashlib
import io
import json
import logging
import math
import re
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, TextIO

import numpy as np
import numpy.typing as npt

from .errors import DataValidationError

if TYPE_CHECKING:
    from .analysis import RunSummary
    from .scoring import ScoreVector

logger = logging.getLogger(__name__)

UNKNOWN_LABEL = -1

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_INTEGER = re.compile(r"[+-]?\d+")
_NON_FINITE = {"nan", "+nan", "-nan", "inf", "+inf", "-inf", "infinity", "+infinity", "-infinity"}


def _frozen(array: npt.ArrayLike, dtype: type) -> np.ndarray:
    result = np.array(array, dtype=dtype, copy=True)
    result.setflags(write=False)
    return result


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _fmt(value: float) -> str:
    # repr of a Python float is the shortest string that round-trips.
    return repr(float(value))


def parse_number(token: str, row: int | None = None, column: int | None = None) -> float:
    """
    Parses one numeric cell.

    Accepts '.' decimals and scientific notation; rejects thousands
    separators, whitespace padding and every non-finite token.
    """
    if token.strip().lower() in _NON_FINITE:
        raise DataValidationError("non-finite value", row=row, column=column)
    if not _NUMBER.fullmatch(token):
        raise DataValidationError(f"malformed number {token!r}", row=row, column=column)
    value = float(token)
    if not math.isfinite(value):
        raise DataValidationError("non-finite value", row=row, column=column)
    return value


def _parse_int(token: str, row: int, column: int) -> int:
    if not _INTEGER.fullmatch(token):
        raise DataValidationError(f"malformed integer {token!r}", row=row, column=column)
    return int(token)


def _rows(text: str) -> Iterator[tuple[int, list[str]]]:
    """Yields (line number, cells) for every non-blank CSV record."""
    reader = csv.reader(io.StringIO(text, newline=""))
    for cells in reader:
        if not cells:
            continue
        yield reader.line_num, cells


def _writer(stream: TextIO) -> Any:
    return csv.writer(stream, lineterminator="\n")


# Evaluation runs.


@dataclass(frozen=True, eq=False)
class EvaluationRun:
    """
    Exported outputs of one model on one test set.

    Labels are class indices in [0, C) for known samples and ``-1`` for
    samples of unknown classes. Features are either present for every sample
    or absent for all.
    """

    sample_ids: tuple[str, ...]
    labels: np.ndarray
    logits: np.ndarray
    features: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        object.__setattr__(self, "labels", _frozen(self.labels, np.int64))
        object.__setattr__(self, "logits", _frozen(self.logits, np.float64))
        if self.features is not None:
            object.__setattr__(self, "features", _frozen(self.features, np.float64))
        self._validate()

    def _validate(self) -> None:
        n = len(self.sample_ids)
        if n == 0:
            raise DataValidationError("run has no samples")
        if self.logits.ndim != 2 or self.logits.shape[0] != n:
            raise DataValidationError("logits must be an N x C matrix aligned with samples")
        if self.num_classes < 2:
            raise DataValidationError("run needs at least 2 classes")
        if self.labels.shape != (n,):
            raise DataValidationError("labels must have one entry per sample")
        if len(set(self.sample_ids)) != n:
            raise DataValidationError("duplicate sample_id")
        if not np.all(np.isfinite(self.logits)):
            raise DataValidationError("non-finite logit")
        bad = (self.labels != UNKNOWN_LABEL) & ((self.labels < 0) | (self.labels >= self.num_classes))
        if np.any(bad):
            raise DataValidationError(f"label outside {{-1}} U [0, {self.num_classes})")
        if self.features is not None:
            if self.features.ndim != 2 or self.features.shape[0] != n:
                raise DataValidationError("features must be an N x D matrix aligned with samples")
            if self.features.shape[1] == 0:
                object.__setattr__(self, "features", None)
            elif not np.all(np.isfinite(self.features)):
                raise DataValidationError("non-finite feature")

    @property
    def num_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def num_classes(self) -> int:
        return int(self.logits.shape[1])

    @property
    def feature_dim(self) -> int:
        return 0 if self.features is None else int(self.features.shape[1])

    @property
    def known_mask(self) -> np.ndarray:
        return self.labels != UNKNOWN_LABEL

    @property
    def unknown_mask(self) -> np.ndarray:
        return self.labels == UNKNOWN_LABEL

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EvaluationRun):
            return NotImplemented
        if self.features is None or other.features is None:
            same_features = self.features is None and other.features is None
        else:
            same_features = np.array_equal(self.features, other.features)
        return (
            self.sample_ids == other.sample_ids
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.logits, other.logits)
            and same_features
        )

    __hash__ = None  # type: ignore[assignment]


def _indexed_columns(header: list[str], start: int, prefix: str) -> int:
    count = 0
    while start + count < len(header) and header[start + count].startswith(prefix):
        expected = f"{prefix}{count}"
        if header[start + count] != expected:
            raise DataValidationError(
                f"malformed header: expected {expected!r}, got {header[start + count]!r}",
                row=1,
                column=start + count + 1,
            )
        count += 1
    return count


def parse_run(stream: TextIO) -> EvaluationRun:
    """
    Parses a run file ``sample_id,label,logit_0..logit_{C-1}[,feat_0..feat_{D-1}]``.

    :param stream: Text stream positioned at the header line.
    :return: Validated run, in file order.
    """
    rows = _rows(stream.read())
    try:
        _, header = next(rows)
    except StopIteration:
        raise DataValidationError("malformed header: empty file", row=1)
    if header[:2] != ["sample_id", "label"]:
        raise DataValidationError("malformed header: must start with 'sample_id,label'", row=1)
    num_classes = _indexed_columns(header, 2, "logit_")
    feature_dim = _indexed_columns(header, 2 + num_classes, "feat_")
    width = 2 + num_classes + feature_dim
    if len(header) != width:
        raise DataValidationError(
            f"malformed header: unexpected column {header[width]!r}", row=1, column=width + 1
        )
    if num_classes < 2:
        raise DataValidationError("malformed header: at least 2 logit columns required", row=1)

    sample_ids: list[str] = []
    seen: dict[str, int] = {}
    labels: list[int] = []
    logits: list[list[float]] = []
    features: list[list[float] | None] = []
    for line, cells in rows:
        if len(cells) != width:
            raise DataValidationError(
                f"row width mismatch: expected {width} cells, got {len(cells)}", row=line
            )
        sample_id = cells[0]
        if sample_id in seen:
            raise DataValidationError(
                f"duplicate sample_id {sample_id!r} (first at row {seen[sample_id]})", row=line, column=1
            )
        seen[sample_id] = line
        label = _parse_int(cells[1], line, 2)
        if label != UNKNOWN_LABEL and not 0 <= label < num_classes:
            raise DataValidationError(
                f"label {label} outside {{-1}} U [0, {num_classes})", row=line, column=2
            )
        row_logits = [parse_number(cells[2 + j], line, 3 + j) for j in range(num_classes)]
        feature_cells = cells[2 + num_classes :]
        row_features: list[float] | None = None
        if feature_cells and any(cell != "" for cell in feature_cells):
            offset = 3 + num_classes
            row_features = [parse_number(cell, line, offset + j) for j, cell in enumerate(feature_cells)]
        if features and (features[-1] is None) != (row_features is None):
            raise DataValidationError("mixed presence of features", row=line)
        sample_ids.append(sample_id)
        labels.append(label)
        logits.append(row_logits)
        features.append(row_features)

    if not sample_ids:
        raise DataValidationError("run has no samples", row=2)
    has_features = features[0] is not None
    run = EvaluationRun(
        sample_ids=tuple(sample_ids),
        labels=np.array(labels, dtype=np.int64),
        logits=np.array(logits, dtype=np.float64),
        features=np.array(features, dtype=np.float64) if has_features else None,
    )
    logger.info(
        "Parsed run: %d samples, %d classes, feature_dim=%d",
        run.num_samples,
        run.num_classes,
        run.feature_dim,
    )
    return run


def write_run(run: EvaluationRun, stream: TextIO) -> None:
    writer = _writer(stream)
    header = ["sample_id", "label"] + [f"logit_{j}" for j in range(run.num_classes)]
    header += [f"feat_{j}" for j in range(run.feature_dim)]
    writer.writerow(header)
    for i, sample_id in enumerate(run.sample_ids):
        row = [sample_id, str(int(run.labels[i]))]
        row += [_fmt(value) for value in run.logits[i]]
        if run.features is not None:
            row += [_fmt(value) for value in run.features[i]]
        writer.writerow(row)


def write_scores(run: EvaluationRun, scores: "ScoreVector", stream: TextIO) -> None:
    """Writes the score export ``sample_id,label,score,prediction``."""
    writer = _writer(stream)
    writer.writerow(["sample_id", "label", "score", "prediction"])
    for i, sample_id in enumerate(run.sample_ids):
        writer.writerow(
            [sample_id, str(int(run.labels[i])), _fmt(scores.scores[i]), str(int(scores.predictions[i]))]
        )


# Attribute matrices.


@dataclass(frozen=True, eq=False)
class AttributeMatrix:
    """Per-class attribute frequencies, one row per class, entries in [0, 1]."""

    class_names: tuple[str, ...]
    values: np.ndarray
    source_digest: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "values", _frozen(self.values, np.float64))
        if self.values.ndim != 2 or self.values.shape[0] != len(self.class_names):
            raise DataValidationError("attribute values must be a C x A matrix aligned with class names")
        if len(set(self.class_names)) != len(self.class_names):
            raise DataValidationError("duplicate class name")
        if not np.all(np.isfinite(self.values)):
            raise DataValidationError("non-finite attribute value")
        if np.any((self.values < 0.0) | (self.values > 1.0)):
            raise DataValidationError("attribute value outside [0, 1]")
        for name, row in zip(self.class_names, self.values):
            if not np.any(row > 0.0):
                raise DataValidationError(f'class "{name}" has no attributes, similarity undefined')

    @property
    def num_attributes(self) -> int:
        return int(self.values.shape[1])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AttributeMatrix):
            return NotImplemented
        return self.class_names == other.class_names and np.array_equal(self.values, other.values)

    __hash__ = None  # type: ignore[assignment]


def parse_attribute_matrix(stream: TextIO) -> AttributeMatrix:
    text = stream.read()
    rows = _rows(text)
    try:
        _, header = next(rows)
    except StopIteration:
        raise DataValidationError("malformed header: empty file", row=1)
    if not header or header[0] != "class":
        raise DataValidationError("malformed header: must start with 'class'", row=1, column=1)
    num_attributes = _indexed_columns(header, 1, "attr_")
    if num_attributes == 0 or len(header) != 1 + num_attributes:
        raise DataValidationError("malformed header: expected 'class,attr_0,...'", row=1)

    names: list[str] = []
    seen: dict[str, int] = {}
    values: list[list[float]] = []
    for line, cells in rows:
        if len(cells) != 1 + num_attributes:
            raise DataValidationError(
                f"row width mismatch: expected {1 + num_attributes} cells, got {len(cells)}", row=line
            )
        name = cells[0]
        if not name:
            raise DataValidationError("empty class name", row=line, column=1)
        if name in seen:
            raise DataValidationError(f'duplicate class name "{name}"', row=line, column=1)
        seen[name] = line
        row = []
        for j, cell in enumerate(cells[1:]):
            value = parse_number(cell, line, j + 2)
            if not 0.0 <= value <= 1.0:
                raise DataValidationError(f"attribute value {cell} outside [0, 1]", row=line, column=j + 2)
            row.append(value)
        if not any(value > 0.0 for value in row):
            raise DataValidationError(f'class "{name}" has no attributes, similarity undefined', row=line)
        names.append(name)
        values.append(row)
    if not names:
        raise DataValidationError("attribute matrix has no classes", row=2)
    logger.info("Parsed attribute matrix: %d classes x %d attributes", len(names), num_attributes)
    return AttributeMatrix(tuple(names), np.array(values, dtype=np.float64), _digest(text))


# Hierarchy tables.


class HierarchyScheme(str, Enum):
    CARS = "cars"
    AIRCRAFT = "aircraft"

    @property
    def levels(self) -> tuple[str, ...]:
        if self is HierarchyScheme.CARS:
            return ("make", "model", "type", "year")
        return ("manufacturer", "family", "variant")


@dataclass(frozen=True)
class HierarchyTable:
    """Class names with their label hierarchy, coarsest level first."""

    scheme: HierarchyScheme
    rows: tuple[tuple[str, tuple[str, ...]], ...]
    source_digest: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        arity = len(self.scheme.levels)
        names = [name for name, _ in self.rows]
        if len(set(names)) != len(names):
            raise DataValidationError("duplicate class name")
        for name, levels in self.rows:
            if len(levels) != arity:
                raise DataValidationError(f'class "{name}" has {len(levels)} levels, scheme needs {arity}')
            if not all(level.strip() for level in levels):
                raise DataValidationError(f'class "{name}" has an empty level value')

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.rows)

    def levels_of(self) -> dict[str, tuple[str, ...]]:
        return dict(self.rows)


def parse_hierarchy_table(stream: TextIO, scheme: HierarchyScheme | str) -> HierarchyTable:
    scheme = HierarchyScheme(scheme)
    expected = ["class", *scheme.levels]
    text = stream.read()
    rows = _rows(text)
    try:
        _, header = next(rows)
    except StopIteration:
        raise DataValidationError("malformed header: empty file", row=1)
    if len(header) != len(expected):
        raise DataValidationError(
            f"wrong column count for scheme {scheme.value}: expected {len(expected)}, got {len(header)}",
            row=1,
        )
    if header != expected:
        raise DataValidationError(f"malformed header: expected {','.join(expected)!r}", row=1)

    parsed: list[tuple[str, tuple[str, ...]]] = []
    seen: dict[str, int] = {}
    for line, cells in rows:
        if len(cells) != len(expected):
            raise DataValidationError(
                f"wrong column count for scheme {scheme.value}: expected {len(expected)}, got {len(cells)}",
                row=line,
            )
        name, *levels = cells
        if not name:
            raise DataValidationError("empty class name", row=line, column=1)
        if name in seen:
            raise DataValidationError(f'duplicate class name "{name}"', row=line, column=1)
        for j, value in enumerate(levels):
            if not value.strip():
                raise DataValidationError(f"empty {scheme.levels[j]} value", row=line, column=j + 2)
        seen[name] = line
        parsed.append((name, tuple(levels)))
    logger.info("Parsed %s hierarchy: %d classes", scheme.value, len(parsed))
    return HierarchyTable(scheme, tuple(parsed), _digest(text))


# Semantic trees.


@dataclass(frozen=True)
class SemanticTree:
    """
    A rooted taxonomy. ``parent`` maps every node id to its parent (``None``
    for the root); ``class_of`` maps class-bearing nodes to class names.
    """

    parent: Mapping[str, str | None]
    class_of: Mapping[str, str]
    source_digest: str = field(default="", compare=False)
    _depth: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "parent", dict(self.parent))
        object.__setattr__(self, "class_of", dict(self.class_of))
        roots = [node for node, parent in self.parent.items() if parent is None]
        if not roots:
            raise DataValidationError("tree has no root")
        if len(roots) > 1:
            raise DataValidationError(f"multiple roots: {', '.join(sorted(roots))}", node=sorted(roots)[1])
        for node, parent in self.parent.items():
            if parent is not None and parent not in self.parent:
                raise DataValidationError(f"dangling parent reference {parent!r}", node=node)
        for node in self.class_of:
            if node not in self.parent:
                raise DataValidationError("class assigned to unknown node", node=node)
        names = list(self.class_of.values())
        if len(set(names)) != len(names):
            duplicate = next(name for name in names if names.count(name) > 1)
            raise DataValidationError(f'duplicate class name "{duplicate}"')
        object.__setattr__(self, "_depth", self._compute_depths())

    def _compute_depths(self) -> dict[str, int]:
        depth: dict[str, int] = {}
        for start in self.parent:
            path = []
            on_path = set()
            node: str | None = start
            while node is not None and node not in depth:
                if node in on_path:
                    raise DataValidationError("cycle detected", node=node)
                on_path.add(node)
                path.append(node)
                node = self.parent[node]
            base = -1 if node is None else depth[node]
            for offset, visited in enumerate(reversed(path), start=1):
                depth[visited] = base + offset
        return depth

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(self.parent)

    @property
    def root(self) -> str:
        return next(node for node, parent in self.parent.items() if parent is None)

    def depth(self, node: str) -> int:
        if node not in self._depth:
            raise DataValidationError("unknown node", node=node)
        return self._depth[node]

    def node_of_class(self) -> dict[str, str]:
        return {name: node for node, name in self.class_of.items()}


def parse_semantic_tree(stream: TextIO) -> SemanticTree:
    text = stream.read()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as error:
        raise DataValidationError(f"malformed JSON: {error.msg}", row=error.lineno, column=error.colno)
    if not isinstance(document, dict) or not isinstance(document.get("nodes"), list):
        raise DataValidationError('semantic tree must be an object with a "nodes" list')

    parent: dict[str, str | None] = {}
    class_of: dict[str, str] = {}
    class_nodes: dict[str, str] = {}
    for entry in document["nodes"]:
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str) or not entry["id"]:
            raise DataValidationError(f"node entry needs a non-empty string id: {entry!r}")
        node = entry["id"]
        if node in parent:
            raise DataValidationError("duplicate node id", node=node)
        node_parent = entry.get("parent")
        if node_parent is not None and not isinstance(node_parent, str):
            raise DataValidationError("parent must be a string or null", node=node)
        if node_parent == node:
            raise DataValidationError("cycle detected", node=node)
        name = entry.get("class")
        if name is not None:
            if not isinstance(name, str) or not name:
                raise DataValidationError("class must be a non-empty string or null", node=node)
            if name in class_nodes:
                raise DataValidationError(f'duplicate class name "{name}" (also on "{class_nodes[name]}")', node=node)
            class_nodes[name] = node
            class_of[node] = name
        parent[node] = node_parent
    tree = SemanticTree(parent, class_of, _digest(text))
    logger.info("Parsed semantic tree: %d nodes, %d classes", len(parent), len(class_of))
    return tree


# Split specs.


class SplitScheme(str, Enum):
    ATTRIBUTE = "attribute"
    HIERARCHY_CARS = "hierarchy-cars"
    HIERARCHY_AIRCRAFT = "hierarchy-aircraft"
    TREE = "tree"


@dataclass(frozen=True)
class SplitMeta:
    seed: int | None
    samples: int
    source_digest: str


@dataclass(frozen=True)
class SplitSpec:
    """Known classes plus open-set classes binned by difficulty."""

    scheme: SplitScheme
    known: tuple[str, ...]
    easy: tuple[str, ...]
    medium: tuple[str, ...]
    hard: tuple[str, ...]
    difficulty: Mapping[str, float]
    meta: SplitMeta

    def __post_init__(self) -> None:
        for name in ("known", "easy", "medium", "hard"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "difficulty", {k: float(v) for k, v in self.difficulty.items()})
        seen: dict[str, str] = {}
        for bin_name in ("known", "easy", "medium", "hard"):
            for name in getattr(self, bin_name):
                if name in seen:
                    where = "twice in" if seen[name] == bin_name else f"in both {seen[name]} and"
                    raise DataValidationError(f'class "{name}" appears {where} {bin_name}')
                seen[name] = bin_name
        if set(self.difficulty) != set(self.open_classes):
            raise DataValidationError("difficulty must cover exactly the open-set classes")
        if any(not math.isfinite(value) for value in self.difficulty.values()):
            raise DataValidationError("non-finite difficulty value")

    @property
    def open_classes(self) -> tuple[str, ...]:
        return self.easy + self.medium + self.hard

    def evaluation_bins(self, merge_medium: bool = True) -> dict[str, tuple[str, ...]]:
        """
        Bins used for reporting. By default 'Medium' is folded into 'Hard',
        giving the two-bin Easy / Hard layout.
        """
        if merge_medium:
            return {"easy": self.easy, "hard": self.medium + self.hard}
        return {"easy": self.easy, "medium": self.medium, "hard": self.hard}

    def counts(self) -> dict[str, int]:
        return {
            "known": len(self.known),
            "easy": len(self.easy),
            "medium": len(self.medium),
            "hard": len(self.hard),
        }


def _dump_json(document: Any, stream: TextIO) -> None:
    stream.write(json.dumps(document, indent=2, ensure_ascii=False))
    stream.write("\n")


def write_split(split: SplitSpec, stream: TextIO) -> None:
    _dump_json(
        {
            "scheme": split.scheme.value,
            "known": list(split.known),
            "easy": list(split.easy),
            "medium": list(split.medium),
            "hard": list(split.hard),
            "difficulty": {name: float(split.difficulty[name]) for name in sorted(split.difficulty)},
            "meta": {
                "seed": split.meta.seed,
                "samples": split.meta.samples,
                "source_digest": split.meta.source_digest,
            },
        },
        stream,
    )


def _load_json(stream: TextIO) -> Any:
    try:
        return json.loads(stream.read())
    except json.JSONDecodeError as error:
        raise DataValidationError(f"malformed JSON: {error.msg}", row=error.lineno, column=error.colno)


def _string_list(document: Mapping[str, Any], key: str) -> tuple[str, ...]:
    value = document.get(key)
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise DataValidationError(f'"{key}" must be a list of strings')
    return tuple(value)


def parse_split(stream: TextIO) -> SplitSpec:
    document = _load_json(stream)
    if not isinstance(document, dict):
        raise DataValidationError("split spec must be a JSON object")
    try:
        scheme = SplitScheme(document.get("scheme"))
    except ValueError:
        raise DataValidationError(f"unknown split scheme {document.get('scheme')!r}")
    difficulty = document.get("difficulty")
    if not isinstance(difficulty, dict) or not all(
        isinstance(value, int | float) and not isinstance(value, bool) for value in difficulty.values()
    ):
        raise DataValidationError('"difficulty" must map class names to numbers')
    meta = document.get("meta")
    if not isinstance(meta, dict):
        raise DataValidationError('"meta" must be an object')
    seed, samples, digest = meta.get("seed"), meta.get("samples"), meta.get("source_digest")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise DataValidationError('"meta.seed" must be an integer or null')
    if not isinstance(samples, int) or isinstance(samples, bool) or samples < 0:
        raise DataValidationError('"meta.samples" must be a non-negative integer')
    if not isinstance(digest, str):
        raise DataValidationError('"meta.source_digest" must be a string')
    return SplitSpec(
        scheme=scheme,
        known=_string_list(document, "known"),
        easy=_string_list(document, "easy"),
        medium=_string_list(document, "medium"),
        hard=_string_list(document, "hard"),
        difficulty=difficulty,
        meta=SplitMeta(seed=seed, samples=samples, source_digest=digest),
    )


# Metric reports.

Points = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class MetricsReport:
    """
    Metrics of one scoring rule on one run. Open-set metrics are ``None``
    when the run has no unknown samples.
    """

    rule: str
    accuracy: float
    auroc: float | None
    oscr: float | None
    ap: float | None
    openness: float
    roc_points: Points | None = None
    oscr_points: Points | None = None

    def __post_init__(self) -> None:
        for name in ("accuracy", "auroc", "oscr", "ap", "openness"):
            value = getattr(self, name)
            if value is None and name in ("auroc", "oscr", "ap"):
                continue
            if value is None or not 0.0 <= value <= 1.0:
                raise DataValidationError(f"{name} must lie in [0, 1], got {value!r}")
        for name in ("roc_points", "oscr_points"):
            points = getattr(self, name)
            if points is None:
                continue
            points = tuple((float(x), float(y)) for x, y in points)
            object.__setattr__(self, name, points)
            xs = [x for x, _ in points]
            if any(b < a for a, b in zip(xs, xs[1:])):
                raise DataValidationError(f"{name} must be sorted by x")


def _report_document(report: MetricsReport) -> dict[str, Any]:
    def scalar(value: float | None) -> float | None:
        return None if value is None else float(value)

    document: dict[str, Any] = {
        "rule": report.rule,
        "accuracy": scalar(report.accuracy),
        "auroc": scalar(report.auroc),
        "oscr": scalar(report.oscr),
        "ap": scalar(report.ap),
        "openness": scalar(report.openness),
    }
    if report.roc_points is not None:
        document["roc_points"] = [[x, y] for x, y in report.roc_points]
    if report.oscr_points is not None:
        document["oscr_points"] = [[x, y] for x, y in report.oscr_points]
    return document


def write_report(report: MetricsReport, stream: TextIO) -> None:
    _dump_json(_report_document(report), stream)


def write_reports(reports: Sequence[MetricsReport], stream: TextIO) -> None:
    _dump_json([_report_document(report) for report in reports], stream)


def _points(document: Mapping[str, Any], key: str) -> Points | None:
    value = document.get(key)
    if value is None:
        return None
    if not isinstance(value, list) or not all(
        isinstance(pair, list) and len(pair) == 2 for pair in value
    ):
        raise DataValidationError(f'"{key}" must be a list of [x, y] pairs')
    return tuple((float(x), float(y)) for x, y in value)


def parse_report(stream: TextIO) -> MetricsReport:
    document = _load_json(stream)
    if not isinstance(document, dict) or not isinstance(document.get("rule"), str):
        raise DataValidationError('metrics report must be an object with a string "rule"')
    for key in ("accuracy", "auroc", "oscr", "ap", "openness"):
        if key not in document:
            raise DataValidationError(f'metrics report is missing "{key}"')
    return MetricsReport(
        rule=document["rule"],
        accuracy=document["accuracy"],
        auroc=document["auroc"],
        oscr=document["oscr"],
        ap=document["ap"],
        openness=document["openness"],
        roc_points=_points(document, "roc_points"),
        oscr_points=_points(document, "oscr_points"),
    )


# Run summaries.

SUMMARY_HEADER = ("run_id", "method", "dataset", "accuracy", "auroc", "oscr", "ap")


def parse_summaries(stream: TextIO) -> list["RunSummary"]:
    from .analysis import RunSummary

    rows = _rows(stream.read())
    try:
        _, header = next(rows)
    except StopIteration:
        raise DataValidationError("malformed header: empty file", row=1)
    if tuple(header) != SUMMARY_HEADER:
        raise DataValidationError(f"malformed header: expected {','.join(SUMMARY_HEADER)!r}", row=1)
    summaries: list[RunSummary] = []
    seen: dict[str, int] = {}
    for line, cells in rows:
        if len(cells) != len(SUMMARY_HEADER):
            raise DataValidationError(
                f"row width mismatch: expected {len(SUMMARY_HEADER)} cells, got {len(cells)}", row=line
            )
        run_id, method, dataset = cells[:3]
        if run_id in seen:
            raise DataValidationError(f"duplicate run_id {run_id!r}", row=line, column=1)
        seen[run_id] = line
        metrics = []
        for j, cell in enumerate(cells[3:], start=4):
            value = parse_number(cell, line, j)
            if not 0.0 <= value <= 1.0:
                raise DataValidationError(f"{SUMMARY_HEADER[j - 1]} {cell} outside [0, 1]", row=line, column=j)
            metrics.append(value)
        summaries.append(RunSummary(run_id, method, dataset, *metrics))
    return summaries


def write_summaries(summaries: Iterable["RunSummary"], stream: TextIO, header: bool = True) -> None:
    writer = _writer(stream)
    if header:
        writer.writerow(SUMMARY_HEADER)
    for summary in summaries:
        writer.writerow(
            [
                summary.run_id,
                summary.method,
                summary.dataset,
                _fmt(summary.accuracy),
                _fmt(summary.auroc),
                _fmt(summary.oscr),
                _fmt(summary.ap),
            ]
        )
