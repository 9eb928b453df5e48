"""Axis-aligned decision trees with a leaf budget, and bagged forests of them.

Trees are stored as flat node arrays. A sample is routed left when
``x[feature] <= threshold``; leaves hold a class-probability vector. The
node-array layout doubles as the JSON interchange format consumed by the
pruning, refinement and code-generation stages.
"""

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .data import Dataset
from .seeding import derive_rng

# Gini decreases below this are treated as zero (guards float noise on
# mathematically useless splits).
_MIN_DECREASE = 1e-12

LEAF = -1


@dataclass
class Tree:
    """Binary decision tree as parallel node arrays.

    ``feature`` is -1 for leaf nodes; ``left``/``right`` hold child node
    indices for split nodes. ``leaf_values[i]`` is the length-C prediction
    vector of node i and is meaningful only where ``feature[i] == -1``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_values: np.ndarray
    root: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature == LEAF))

    @property
    def n_classes(self) -> int:
        return self.leaf_values.shape[1]

    def leaf_node_ids(self) -> np.ndarray:
        """Node indices of all leaves, ascending."""
        return np.nonzero(self.feature == LEAF)[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index each row of X is routed to."""
        idx = np.full(X.shape[0], self.root, dtype=np.int64)
        pending = np.nonzero(self.feature[idx] != LEAF)[0]
        while pending.size:
            nodes = idx[pending]
            go_left = X[pending, self.feature[nodes]] <= self.threshold[nodes]
            idx[pending] = np.where(go_left, self.left[nodes], self.right[nodes])
            pending = pending[self.feature[idx[pending]] != LEAF]
        return idx

    def predict(self, X: np.ndarray) -> np.ndarray:
        """(N, C) leaf vectors for the rows of X."""
        return self.leaf_values[self.apply(X)]

    def copy(self) -> "Tree":
        return Tree(
            self.feature.copy(),
            self.threshold.copy(),
            self.left.copy(),
            self.right.copy(),
            self.leaf_values.copy(),
            self.root,
        )


@dataclass
class Forest:
    """Ensemble of trees averaged with a weight vector (uniform when trained)."""

    trees: list[Tree]
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.weights is None:
            self.weights = np.full(len(self.trees), 1.0 / len(self.trees))
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.weights) != len(self.trees):
            raise ValueError("one weight per tree required")

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_classes(self) -> int:
        return self.trees[0].n_classes


class _TreeBuilder:
    """Accumulates nodes during growth; converts to array form at the end."""

    def __init__(self, n_classes):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.leaf_values = []
        self.n_classes = n_classes

    def add_leaf(self, value) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.leaf_values.append(value)
        return len(self.feature) - 1

    def make_split(self, node, feature, threshold, left, right):
        self.feature[node] = feature
        self.threshold[node] = threshold
        self.left[node] = left
        self.right[node] = right
        self.leaf_values[node] = np.zeros(self.n_classes)

    def build(self) -> Tree:
        return Tree(
            np.asarray(self.feature, dtype=np.int32),
            np.asarray(self.threshold, dtype=np.float64),
            np.asarray(self.left, dtype=np.int32),
            np.asarray(self.right, dtype=np.int32),
            np.asarray(self.leaf_values, dtype=np.float64),
        )


@njit(cache=True)
def _split_scores(x, Ysub, counts, parent_score, min_decrease):
    """Scan all candidate columns for the split with the largest Gini decrease.

    Returns (decrease, column, sorted position) or (-1.0, -1, -1) when no
    split clears ``min_decrease``. Strict improvement comparisons give the
    (lower feature, lower threshold) tie-break for ascending columns.
    """
    n, n_cols = x.shape
    n_classes = Ysub.shape[1]
    best_dec = -np.inf
    best_col = -1
    best_pos = -1
    left = np.empty(n_classes)
    for f in range(n_cols):
        order = np.argsort(x[:, f], kind="mergesort")
        for c in range(n_classes):
            left[c] = 0.0
        for p in range(n - 1):
            i = order[p]
            for c in range(n_classes):
                left[c] += Ysub[i, c]
            if x[i, f] < x[order[p + 1], f]:
                n_left = p + 1.0
                n_right = n - n_left
                left_score = 0.0
                right_score = 0.0
                for c in range(n_classes):
                    left_score += left[c] * left[c]
                    rc = counts[c] - left[c]
                    right_score += rc * rc
                dec = left_score / n_left + right_score / n_right - parent_score
                if dec > best_dec:
                    best_dec = dec
                    best_col = f
                    best_pos = p
    if best_col < 0 or best_dec <= min_decrease:
        return -1.0, -1, -1
    return best_dec, best_col, best_pos


def _best_split(X, Y, sample, candidate_features):
    """Best (decrease, feature, threshold, left_sample, right_sample) or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Ties in impurity decrease go to the lower feature index, then
    the lower threshold.
    """
    n = sample.size
    Ysub = Y[sample]
    counts = Ysub.sum(axis=0)
    if counts.max() == n:  # pure node
        return None
    parent_score = (counts**2).sum() / n

    x = X[np.ix_(sample, candidate_features)]
    decrease, col, pos = _split_scores(x, Ysub, counts, parent_score, _MIN_DECREASE)
    if col < 0:
        return None
    order = np.argsort(x[:, col], kind="mergesort")
    threshold = (x[order[pos], col] + x[order[pos + 1], col]) / 2.0
    return (
        decrease,
        int(candidate_features[col]),
        float(threshold),
        sample[order[: pos + 1]],
        sample[order[pos + 1 :]],
    )


def train_tree(dataset: Dataset, sample, max_leaves: int, n_features_per_split: int,
               rng: np.random.Generator) -> Tree:
    """Grow a tree best-first until the leaf budget is exhausted.

    The frontier leaf with the largest weighted Gini decrease is split
    first. A node stays a leaf when it is pure, has fewer than 2 samples,
    or none of its candidate features yields a positive decrease. Leaf
    predictions are the class frequencies of the samples reaching them.
    """
    sample = np.asarray(sample, dtype=np.int64)
    if sample.size == 0:
        raise ValueError("cannot train a tree on an empty sample")
    if max_leaves < 1:
        raise ValueError("max_leaves must be >= 1")
    d = dataset.n_features
    if not 1 <= n_features_per_split <= d:
        raise ValueError(f"n_features_per_split must be in [1, {d}]")

    X, Y = dataset.features, dataset.labels
    builder = _TreeBuilder(dataset.n_classes)

    def new_leaf(node_sample):
        counts = Y[node_sample].sum(axis=0)
        return builder.add_leaf(counts / node_sample.size)

    def propose(node, node_sample):
        if node_sample.size < 2:
            return None
        feats = np.sort(rng.choice(d, size=n_features_per_split, replace=False))
        found = _best_split(X, Y, node_sample, feats)
        if found is None:
            return None
        decrease, f, t, left_sample, right_sample = found
        return (-decrease, node, f, t, left_sample, right_sample)

    root = new_leaf(sample)
    n_leaves = 1
    frontier = []
    counter = 0  # FIFO tie-break keeps expansion order deterministic
    if max_leaves > 1:
        candidate = propose(root, sample)
        if candidate is not None:
            heapq.heappush(frontier, (candidate[0], counter, candidate[1:]))
            counter += 1

    while frontier and n_leaves < max_leaves:
        _, _, (node, f, t, left_sample, right_sample) = heapq.heappop(frontier)
        left = new_leaf(left_sample)
        right = new_leaf(right_sample)
        builder.make_split(node, f, t, left, right)
        n_leaves += 1
        if n_leaves < max_leaves:
            for child, child_sample in ((left, left_sample), (right, right_sample)):
                candidate = propose(child, child_sample)
                if candidate is not None:
                    heapq.heappush(frontier, (candidate[0], counter, candidate[1:]))
                    counter += 1
    return builder.build()


def train_forest(dataset: Dataset, train_rows, n_trees: int, max_leaves: int, seed: int,
                 n_features_per_split: int | None = None) -> Forest:
    """Train a bagged forest of ``n_trees`` trees.

    Each tree sees a bootstrap resample of ``train_rows`` (same size, with
    replacement) and draws ``n_features_per_split`` candidate features per
    split (default ceil(sqrt(d))). Tree i's RNG stream depends only on
    (seed, i), so any training schedule produces the same forest.
    """
    rows = np.asarray(train_rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("train_rows is empty")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    if n_features_per_split is None:
        n_features_per_split = math.ceil(math.sqrt(dataset.n_features))

    trees = []
    for i in range(n_trees):
        rng = derive_rng(seed, i)
        bootstrap = rows[rng.integers(0, rows.size, size=rows.size)]
        trees.append(train_tree(dataset, bootstrap, max_leaves, n_features_per_split, rng))
    return Forest(trees, np.full(n_trees, 1.0 / n_trees))


def _subset_indices(forest: Forest, subset) -> np.ndarray:
    if subset is None:
        return np.arange(forest.n_trees)
    idx = np.asarray(sorted(subset), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("subset is empty")
    if len(set(idx.tolist())) != idx.size or idx.min() < 0 or idx.max() >= forest.n_trees:
        raise ValueError("subset must hold distinct indices into the forest")
    return idx


def predict_rows(forest: Forest, X: np.ndarray, subset=None) -> np.ndarray:
    """(N, C) average of the member predictions over ``subset`` (all trees by default).

    Members are accumulated in ascending tree order regardless of the
    subset's order, so a subset equal to the whole forest reproduces the
    unpruned prediction bit for bit.
    """
    idx = _subset_indices(forest, subset)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    total = np.zeros((X.shape[0], forest.n_classes))
    for i in idx:
        total += forest.trees[i].predict(X)
    return total / idx.size


def predict(forest: Forest, x, subset=None) -> np.ndarray:
    """Length-C averaged prediction vector for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature vector; use predict_rows for batches")
    return predict_rows(forest, x[None, :], subset)[0]


def accuracy(forest: Forest, dataset: Dataset, rows, subset=None) -> float:
    """Fraction of ``rows`` whose argmax prediction matches the label.

    Argmax ties resolve to the lowest class index.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("rows is empty")
    scores = predict_rows(forest, dataset.features[rows], subset)
    predicted = np.argmax(scores, axis=1)
    return float(np.mean(predicted == dataset.label_indices[rows]))


def tree_to_json(tree: Tree) -> dict:
    nodes = []
    for i in range(tree.n_nodes):
        if tree.feature[i] == LEAF:
            nodes.append({"leaf": {"p": tree.leaf_values[i].tolist()}})
        else:
            nodes.append({
                "split": {
                    "f": int(tree.feature[i]),
                    "t": float(tree.threshold[i]),
                    "l": int(tree.left[i]),
                    "r": int(tree.right[i]),
                }
            })
    return {"nodes": nodes, "root": tree.root}


def tree_from_json(doc: dict, n_classes: int) -> Tree:
    nodes = doc["nodes"]
    n = len(nodes)
    feature = np.full(n, LEAF, dtype=np.int32)
    threshold = np.zeros(n)
    left = np.full(n, LEAF, dtype=np.int32)
    right = np.full(n, LEAF, dtype=np.int32)
    leaf_values = np.zeros((n, n_classes))
    for i, node in enumerate(nodes):
        if "leaf" in node:
            p = node["leaf"]["p"]
            if len(p) != n_classes:
                raise ValueError("leaf vector width does not match n_classes")
            leaf_values[i] = p
        elif "split" in node:
            s = node["split"]
            feature[i] = s["f"]
            threshold[i] = s["t"]
            left[i] = s["l"]
            right[i] = s["r"]
        else:
            raise ValueError(f"node {i} is neither a split nor a leaf")
    return Tree(feature, threshold, left, right, leaf_values, int(doc.get("root", 0)))


def forest_to_json(forest: Forest) -> dict:
    return {
        "n_classes": forest.n_classes,
        "trees": [tree_to_json(t) for t in forest.trees],
        "weights": forest.weights.tolist(),
    }


def forest_from_json(doc: dict) -> Forest:
    n_classes = doc["n_classes"]
    trees = [tree_from_json(t, n_classes) for t in doc["trees"]]
    return Forest(trees, np.asarray(doc["weights"], dtype=np.float64))


def save_forest(forest: Forest, path) -> None:
    with open(path, "w") as fh:
        json.dump(forest_to_json(forest), fh, separators=(",", ":"))


def load_forest(path) -> Forest:
    with open(path) as fh:
        return forest_from_json(json.load(fh))
