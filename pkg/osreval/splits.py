"""
Easy / Medium / Hard open-set class splits.

Three constructions are supported: a seeded search over known-class subsets
scored by attribute similarity, name-hierarchy rules for cars and aircraft
tables, and total path distance in a semantic tree.
"""

import logging
from collections.abc import Collection, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import cfg
from .errors import DataValidationError, InvalidSplitError
from .runio import (
    AttributeMatrix,
    HierarchyScheme,
    HierarchyTable,
    SemanticTree,
    SplitMeta,
    SplitScheme,
    SplitSpec,
)

logger = logging.getLogger(__name__)

# Subsets are drawn in fixed-size blocks so the PRNG stream never depends on
# chunking or worker count.
SAMPLING_BLOCK = 4096

Ranked = list[tuple[str, float]]


class BinRule(str, Enum):
    RANK = "rank"
    WIDTH = "width"


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    class_names: tuple[str, ...]
    values: np.ndarray

    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.class_names)}

    def similarity(self, a: str, b: str) -> float:
        index = self.index()
        return float(self.values[index[a], index[b]])


def class_similarity_matrix(matrix: AttributeMatrix) -> SimilarityMatrix:
    """Cosine similarity between the attribute rows of every pair of classes."""
    rows = matrix.values / np.linalg.norm(matrix.values, axis=1, keepdims=True)
    values = rows @ rows.T
    values = np.clip((values + values.T) / 2.0, 0.0, 1.0)
    np.fill_diagonal(values, 1.0)
    values.setflags(write=False)
    return SimilarityMatrix(matrix.class_names, values)


def _closed_indices(names: Sequence[str], closed: Iterable[str]) -> np.ndarray:
    index = {name: i for i, name in enumerate(names)}
    closed = list(dict.fromkeys(closed))
    missing = [name for name in closed if name not in index]
    if missing:
        raise DataValidationError(f'unknown closed class "{missing[0]}"')
    if not closed:
        raise InvalidSplitError("closed set is empty")
    if len(closed) >= len(names):
        raise InvalidSplitError("closed set covers every class, nothing is left open")
    return np.array([index[name] for name in closed], dtype=np.intp)


def rank_open_classes(similarity: SimilarityMatrix, closed: Collection[str]) -> Ranked:
    """
    Pairs each open class with its maximum similarity to the closed set,
    least similar first; ties go to the lexicographically smaller name.
    """
    closed_idx = _closed_indices(similarity.class_names, closed)
    is_open = np.ones(len(similarity.class_names), dtype=bool)
    is_open[closed_idx] = False
    best = similarity.values[:, closed_idx].max(axis=1)
    ranked = [(name, float(best[i])) for i, name in enumerate(similarity.class_names) if is_open[i]]
    return sorted(ranked, key=lambda item: (item[1], item[0]))


def _rank_sizes(n: int) -> tuple[int, int, int]:
    easy, medium = n // 3, (n + 1) // 3
    return easy, medium, n - easy - medium


def bin_open_classes(
    ranked: Ranked, rule: BinRule | str = BinRule.RANK
) -> tuple[list[str], list[str], list[str]]:
    """
    Splits an ascending ranking into (easy, medium, hard).

    ``rank`` cuts contiguous thirds with the remainder going to hard.
    ``width`` cuts [min, max] of the values into three equal intervals, a
    boundary value belonging to the harder bin.
    """
    if not ranked:
        raise InvalidSplitError("no open classes to bin")
    names = [name for name, _ in ranked]
    if BinRule(rule) is BinRule.RANK:
        easy, medium, _ = _rank_sizes(len(names))
        return names[:easy], names[easy : easy + medium], names[easy + medium :]
    values = np.array([value for _, value in ranked])
    low, high = float(values.min()), float(values.max())
    first, second = low + (high - low) / 3.0, low + 2.0 * (high - low) / 3.0
    bins: tuple[list[str], list[str], list[str]] = ([], [], [])
    for name, value in ranked:
        bins[0 if value < first else 1 if value < second else 2].append(name)
    return bins


def _draw_subsets(rng: np.random.Generator, num_classes: int, num_known: int, count: int) -> np.ndarray:
    """Vectorised Fisher-Yates: the first ``num_known`` slots of ``count`` shuffles."""
    perm = np.tile(np.arange(num_classes), (count, 1))
    rows = np.arange(count)
    for i in range(num_known):
        j = rng.integers(i, num_classes, size=count)
        swapped = perm[rows, j]
        perm[rows, j] = perm[:, i]
        perm[:, i] = swapped
    return np.sort(perm[:, :num_known], axis=1)


def _score_subsets(values: np.ndarray, subsets: np.ndarray, rule: BinRule) -> tuple[np.ndarray, np.ndarray]:
    """Hard-bin mean and open-class mean of the max closed similarity for each subset."""
    count, num_known = subsets.shape
    num_classes = values.shape[0]
    num_open = num_classes - num_known
    best = values[:, subsets].transpose(1, 0, 2).max(axis=2)
    known = np.zeros((count, num_classes), dtype=bool)
    known[np.arange(count)[:, None], subsets] = True
    open_best = np.where(known, np.nan, best)
    open_mean = np.nansum(open_best, axis=1) / num_open
    if rule is BinRule.RANK:
        _, _, hard = _rank_sizes(num_open)
        ordered = np.sort(np.where(known, -np.inf, best), axis=1)
        hard_mean = ordered[:, num_classes - hard :].mean(axis=1)
    else:
        low = np.nanmin(open_best, axis=1, keepdims=True)
        high = np.nanmax(open_best, axis=1, keepdims=True)
        in_hard = ~known & (best >= low + 2.0 * (high - low) / 3.0)
        hard_mean = np.where(in_hard, best, 0.0).sum(axis=1) / in_hard.sum(axis=1)
    return hard_mean, open_mean


def search_attribute_splits(
    matrix: AttributeMatrix,
    num_known: int,
    num_samples: int,
    seed: int,
    rule: BinRule | str = BinRule.RANK,
    workers: int | None = None,
    chunk_size: int | None = None,
) -> SplitSpec:
    """
    Samples known-class subsets and keeps the one whose open classes are
    hardest.

    A subset's objective is the mean max-similarity over its hard bin, then
    the mean over all its open classes, then the earliest sample index.
    Subsets come from ``Generator(PCG64(seed))`` over the sorted class list.

    :param matrix: Parsed attribute matrix.
    :param num_known: Size of each known-class subset.
    :param num_samples: Number of subsets to draw.
    :param seed: PRNG seed.
    :param rule: Binning rule used for both scoring and the result.
    :param workers: Scoring threads, ``SEARCH_WORKERS`` by default.
    :param chunk_size: Subsets scored per vectorised step, ``SEARCH_CHUNK_SIZE`` by default.
    """
    rule = BinRule(rule)
    num_classes = len(matrix.class_names)
    if not 1 <= num_known < num_classes:
        raise InvalidSplitError(f"num_known must lie in [1, {num_classes - 1}], got {num_known}")
    if num_samples < 1:
        raise InvalidSplitError(f"num_samples must be positive, got {num_samples}")
    workers = workers or cfg.get_int("SEARCH_WORKERS")
    chunk_size = chunk_size or cfg.get_int("SEARCH_CHUNK_SIZE")

    names = sorted(matrix.class_names)
    order = [matrix.class_names.index(name) for name in names]
    similarity = class_similarity_matrix(matrix)
    values = similarity.values[np.ix_(order, order)]

    rng = np.random.Generator(np.random.PCG64(seed))
    best: tuple[float, float, int] = (-np.inf, -np.inf, 0)
    best_subset = np.empty(0, dtype=np.intp)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for block_start in range(0, num_samples, SAMPLING_BLOCK):
            subsets = _draw_subsets(rng, num_classes, num_known, min(SAMPLING_BLOCK, num_samples - block_start))

            def score(start: int, subsets: np.ndarray = subsets) -> tuple[np.ndarray, np.ndarray]:
                return _score_subsets(values, subsets[start : start + chunk_size], rule)

            starts = range(0, len(subsets), chunk_size)
            scored = list(pool.map(score, starts))
            hard_mean = np.concatenate([hard for hard, _ in scored])
            open_mean = np.concatenate([mean for _, mean in scored])
            # lexsort keys run from least to most significant; a descending
            # index key makes the earliest sample win full ties.
            top = int(np.lexsort((-np.arange(len(subsets)), open_mean, hard_mean))[-1])
            candidate = (float(hard_mean[top]), float(open_mean[top]), -(block_start + top))
            if candidate > best:
                best, best_subset = candidate, subsets[top].copy()
    winner = -best[2]
    logger.info(
        "Searched %d subsets with %d worker(s): sample %d wins, hard mean %.6f",
        num_samples,
        workers,
        winner,
        best[0],
    )

    known = [names[i] for i in best_subset]
    ranked = rank_open_classes(similarity, known)
    easy, medium, hard = bin_open_classes(ranked, rule)
    return SplitSpec(
        scheme=SplitScheme.ATTRIBUTE,
        known=tuple(known),
        easy=tuple(easy),
        medium=tuple(medium),
        hard=tuple(hard),
        difficulty=dict(ranked),
        meta=SplitMeta(seed=seed, samples=num_samples, source_digest=matrix.source_digest),
    )


def _shared_prefix(a: Sequence[str], b: Sequence[str]) -> int:
    length = 0
    for left, right in zip(a, b):
        if left != right:
            break
        length += 1
    return length


def hierarchy_splits(
    table: HierarchyTable,
    closed: Collection[str],
    scheme: HierarchyScheme | str | None = None,
) -> SplitSpec:
    """
    Bins open classes by the longest level prefix they share with any closed
    class.

    Cars: make, model and type shared is hard, make and model is medium,
    anything less is easy; medium is then merged into hard. Aircraft: family
    shared is hard, manufacturer only is medium, nothing shared is easy.
    The prefix length is kept as each class's difficulty.
    """
    scheme = table.scheme if scheme is None else HierarchyScheme(scheme)
    if scheme is not table.scheme:
        raise InvalidSplitError(f"table was parsed as {table.scheme.value}, not {scheme.value}")
    levels = table.levels_of()
    closed = list(dict.fromkeys(closed))
    if not closed:
        raise InvalidSplitError("closed set is empty")
    for name in closed:
        if name not in levels:
            raise DataValidationError(f'closed class "{name}" is missing from the hierarchy table')

    hard_from, medium_from = (3, 2) if scheme is HierarchyScheme.CARS else (2, 1)
    closed_set = set(closed)
    bins: dict[str, list[str]] = {"easy": [], "medium": [], "hard": []}
    difficulty: dict[str, float] = {}
    for name in table.class_names:
        if name in closed_set:
            continue
        shared = max(_shared_prefix(levels[name], levels[other]) for other in closed)
        difficulty[name] = float(shared)
        if shared >= hard_from:
            bins["hard"].append(name)
        elif shared >= medium_from:
            bins["medium"].append(name)
        else:
            bins["easy"].append(name)
    if scheme is HierarchyScheme.CARS:
        merged = set(bins["medium"]) | set(bins["hard"])
        bins["hard"] = [name for name in table.class_names if name in merged]
        bins["medium"] = []

    return SplitSpec(
        scheme=SplitScheme(f"hierarchy-{scheme.value}"),
        known=tuple(closed),
        easy=tuple(bins["easy"]),
        medium=tuple(bins["medium"]),
        hard=tuple(bins["hard"]),
        difficulty=difficulty,
        meta=SplitMeta(seed=None, samples=0, source_digest=table.source_digest),
    )


def tree_distance(tree: SemanticTree, a: str, b: str) -> int:
    """Edges on the path between two nodes, through their lowest common ancestor."""
    depth_a, depth_b = tree.depth(a), tree.depth(b)
    ancestors = set()
    node: str | None = a
    while node is not None:
        ancestors.add(node)
        node = tree.parent[node]
    common = b
    while common not in ancestors:
        common = tree.parent[common] or tree.root
    return depth_a + depth_b - 2 * tree.depth(common)


@dataclass(frozen=True)
class TreeDistanceTable:
    """Total path distance from each open class to every closed class."""

    closed: tuple[str, ...]
    totals: dict[str, int]

    def ranked(self) -> list[tuple[str, int]]:
        """Most distant first, names ascending on ties."""
        return sorted(self.totals.items(), key=lambda item: (-item[1], item[0]))


def total_tree_distances(tree: SemanticTree, closed: Collection[str]) -> TreeDistanceTable:
    """
    Sums tree distances to the closed classes for every open class.

    With ``count[a]`` closed classes below ``a``, the total for node ``o``
    is ``sum(depth(c)) + K * depth(o) - 2 * sum(count[a])`` over the
    ancestors ``a`` of ``o`` (itself included, root excluded).
    """
    node_of = tree.node_of_class()
    closed = list(dict.fromkeys(closed))
    if not closed:
        raise InvalidSplitError("closed set is empty")
    for name in closed:
        if name not in node_of:
            raise DataValidationError(f'closed class "{name}" is not in the semantic tree')

    below: dict[str, int] = {}
    for name in closed:
        node: str | None = node_of[name]
        while node is not None:
            below[node] = below.get(node, 0) + 1
            node = tree.parent[node]
    closed_depth = sum(tree.depth(node_of[name]) for name in closed)

    totals: dict[str, int] = {}
    closed_set = set(closed)
    for name, node_id in node_of.items():
        if name in closed_set:
            continue
        shared = 0
        step: str | None = node_id
        while step is not None and tree.parent[step] is not None:
            shared += below.get(step, 0)
            step = tree.parent[step]
        totals[name] = closed_depth + len(closed) * tree.depth(node_id) - 2 * shared
    return TreeDistanceTable(tuple(closed), totals)


def tree_splits(
    tree: SemanticTree,
    closed: Collection[str],
    num_easy: int,
    num_hard: int,
) -> SplitSpec:
    """
    Easy takes the ``num_easy`` open classes farthest from the closed set,
    hard the ``num_hard`` closest. Medium stays empty and any remaining open
    classes are left out of the split.
    """
    if num_easy < 0 or num_hard < 0:
        raise InvalidSplitError("bin sizes must be nonnegative")
    table = total_tree_distances(tree, closed)
    ranked = table.ranked()
    if num_easy + num_hard > len(ranked):
        raise InvalidSplitError(
            f"insufficient open classes: {num_easy} easy + {num_hard} hard requested, {len(ranked)} available"
        )
    easy = ranked[:num_easy]
    hard = ranked[len(ranked) - num_hard :] if num_hard else []
    logger.info("Tree split over %d open classes: %d easy, %d hard", len(ranked), len(easy), len(hard))
    return SplitSpec(
        scheme=SplitScheme.TREE,
        known=table.closed,
        easy=tuple(name for name, _ in easy),
        medium=(),
        hard=tuple(name for name, _ in hard),
        difficulty={name: float(total) for name, total in easy + hard},
        meta=SplitMeta(seed=None, samples=0, source_digest=tree.source_digest),
    )
