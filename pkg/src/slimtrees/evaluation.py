"""Memory accounting, Pareto fronts and area-under-front summaries.

The memory model charges a fixed per-node cost: child pointers (8 bytes),
a leaf flag (1), feature index plus threshold (8), and 4 bytes per class
for the prediction entries, i.e. 17 + 4*C bytes per node summed over every
node of the deployed trees.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .forest import Forest, _subset_indices

NODE_BASE_BYTES = 17
NODE_BYTES_PER_CLASS = 4


@dataclass
class ParetoPoint:
    """One deployable configuration: its footprint and test accuracy."""

    size_bytes: int
    accuracy: float
    config_tag: str = ""

    def __post_init__(self):
        self.size_bytes = int(self.size_bytes)
        if self.size_bytes < 0:
            raise ValueError("size_bytes must be non-negative")
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError("accuracy must lie in [0, 1]")


@dataclass
class ApfReport:
    """A Pareto front with its normalized area.

    ``apf`` integrates the best-accuracy-per-size staircase from 0 to the
    largest input model's size and divides by that size.
    """

    front: list[ParetoPoint]
    apf: float
    s_max: int


def model_size_bytes(forest: Forest, subset=None, n_classes: int | None = None,
                     node_base_bytes: int = NODE_BASE_BYTES,
                     bytes_per_class: int = NODE_BYTES_PER_CLASS) -> int:
    """Deployed size of the ``subset`` trees: (base + per_class*C) * total nodes.

    Split and leaf nodes cost the same; the accounting mirrors a flat
    node-array implementation.
    """
    idx = _subset_indices(forest, subset)
    if n_classes is None:
        n_classes = forest.n_classes
    total_nodes = sum(forest.trees[i].n_nodes for i in idx)
    return (node_base_bytes + bytes_per_class * n_classes) * total_nodes


def pareto_front(points) -> list[ParetoPoint]:
    """Non-dominated points, sorted by size ascending.

    A point dominates another when it is no larger and no less accurate,
    strictly better in at least one of the two. Exact (size, accuracy)
    duplicates keep the earliest input point.
    """
    points = list(points)
    if not points:
        raise ValueError("no points given")
    order = sorted(range(len(points)), key=lambda i: (points[i].size_bytes, -points[i].accuracy, i))
    front = []
    best_accuracy = -np.inf
    for i in order:
        if points[i].accuracy > best_accuracy:
            front.append(points[i])
            best_accuracy = points[i].accuracy
    return front


def normalized_apf(points) -> ApfReport:
    """Normalized area under the best-accuracy-per-size staircase.

    acc(s) is the best accuracy among points no larger than s (0 below the
    smallest point); the area over [0, s_max) is divided by s_max, the
    size of the largest input point.
    """
    points = list(points)
    front = pareto_front(points)
    s_max = max(p.size_bytes for p in points)
    if s_max == 0:
        return ApfReport(front=front, apf=0.0, s_max=0)
    area = 0.0
    for p, nxt in zip(front, front[1:]):
        area += p.accuracy * (nxt.size_bytes - p.size_bytes)
    area += front[-1].accuracy * (s_max - front[-1].size_bytes)
    return ApfReport(front=front, apf=area / s_max, s_max=s_max)


def _average_ranks_desc(values: np.ndarray) -> np.ndarray:
    """Rank 1 = largest value; equal values share the mean of their ranks."""
    order = np.argsort(-values, kind="stable")
    ranks = np.empty(len(values))
    pos = 0
    while pos < len(values):
        end = pos
        while end < len(values) and values[order[end]] == values[order[pos]]:
            end += 1
        ranks[order[pos:end]] = (pos + 1 + end) / 2.0
        pos = end
    return ranks


def rank_table(apf_by_dataset) -> np.ndarray:
    """Mean rank per method over a (datasets x methods) score matrix.

    Within each dataset row, methods are ranked by score descending
    (rank 1 is best, ties averaged); the output is the column-wise mean.
    """
    rows = [np.asarray(row, dtype=np.float64) for row in apf_by_dataset]
    if not rows:
        raise ValueError("no dataset rows given")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged score matrix")
    if width == 0:
        raise ValueError("no methods given")
    ranks = np.stack([_average_ranks_desc(r) for r in rows])
    return ranks.mean(axis=0)


RESULT_COLUMNS = ["dataset", "method", "n_l", "K", "fold", "accuracy", "size_bytes"]


def write_results_csv(rows: list[dict], path) -> None:
    """One row per (dataset, method, n_l, K, fold) configuration."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row[c] for c in RESULT_COLUMNS})


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = []
        for raw in csv.DictReader(fh):
            rows.append({
                "dataset": raw["dataset"],
                "method": raw["method"],
                "n_l": int(raw["n_l"]),
                "K": int(raw["K"]),
                "fold": int(raw["fold"]),
                "accuracy": float(raw["accuracy"]),
                "size_bytes": float(raw["size_bytes"]),
            })
        return rows
