"""Sub-ensemble selection and residual-correlation diagnostics.

The flagship selector is greedy forward selection by ensemble 0-1 loss;
random and individual-error ranking baselines share its interface, and
``register_pruner`` lets external methods plug in without core changes.
"""

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .forest import Forest
from .seeding import derive_rng


@dataclass
class PruneSelection:
    """An ordered choice of ``K`` distinct trees plus its 0/1 weight vector."""

    selected: list[int]
    weight_vector: np.ndarray
    method: str = ""
    seed: int | None = None

    def __post_init__(self):
        self.selected = [int(i) for i in self.selected]
        self.weight_vector = np.asarray(self.weight_vector, dtype=np.float64)
        k = len(self.selected)
        if len(set(self.selected)) != k:
            raise ValueError("selected indices must be distinct")
        if int(np.count_nonzero(self.weight_vector)) != k:
            raise ValueError("weight vector support must equal the selection size")

    @property
    def k(self) -> int:
        return len(self.selected)


def _make_selection(selected, n_trees, method, seed=None) -> PruneSelection:
    w = np.zeros(n_trees)
    w[list(selected)] = 1.0
    return PruneSelection(list(selected), w, method=method, seed=seed)


def member_predictions(forest: Forest, dataset: Dataset, rows) -> np.ndarray:
    """(M, len(rows), C) per-tree prediction vectors on the given rows."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("rows is empty")
    X = dataset.features[rows]
    out = np.empty((forest.n_trees, rows.size, forest.n_classes))
    for i, tree in enumerate(forest.trees):
        out[i] = tree.predict(X)
    return out


def _check_k(k: int, n_trees: int) -> None:
    if not 1 <= k <= n_trees:
        raise ValueError(f"K must be in [1, {n_trees}], got {k}")


def reduced_error_prune(forest: Forest, dataset: Dataset, rows, k: int) -> PruneSelection:
    """Greedy forward selection minimizing ensemble 0-1 loss on ``rows``.

    The first pick is the tree with the lowest individual error; each
    later step adds the unchosen tree whose inclusion gives the lowest
    error of the grown ensemble's averaged prediction. Ties go to the
    lowest tree index. ``rows`` is the pruning set (training rows by
    convention).
    """
    _check_k(k, forest.n_trees)
    preds = member_predictions(forest, dataset, rows)
    truth = dataset.label_indices[np.asarray(rows, dtype=np.int64)]

    selected = []
    unchosen = np.arange(forest.n_trees)
    running = np.zeros_like(preds[0])
    for _ in range(k):
        # Argmax of the candidate sums equals argmax of the averaged ensemble.
        candidate_votes = np.argmax(running[None, :, :] + preds[unchosen], axis=2)
        errors = np.mean(candidate_votes != truth[None, :], axis=1)
        pick = unchosen[int(np.argmin(errors))]
        selected.append(int(pick))
        running += preds[pick]
        unchosen = unchosen[unchosen != pick]
    return _make_selection(selected, forest.n_trees, method="reduced-error")


def random_prune(forest: Forest, k: int, seed: int) -> PruneSelection:
    """K distinct trees drawn uniformly without replacement."""
    _check_k(k, forest.n_trees)
    rng = derive_rng(seed)
    selected = rng.choice(forest.n_trees, size=k, replace=False)
    return _make_selection(selected.tolist(), forest.n_trees, method="random", seed=seed)


def rank_prune_individual_error(forest: Forest, dataset: Dataset, rows, k: int) -> PruneSelection:
    """Keep the K trees with the lowest individual 0-1 error on ``rows``."""
    _check_k(k, forest.n_trees)
    preds = member_predictions(forest, dataset, rows)
    truth = dataset.label_indices[np.asarray(rows, dtype=np.int64)]
    errors = np.mean(np.argmax(preds, axis=2) != truth[None, :], axis=1)
    order = np.argsort(errors, kind="stable")
    return _make_selection(order[:k].tolist(), forest.n_trees, method="rank-ie")


@dataclass
class ResidualGram:
    """M x M matrix of mean residual inner products between ensemble members.

    Entry (i, j) is the average over the sample of the dot product between
    tree i's and tree j's prediction residuals against the one-hot label.
    The diagonal is each member's mean squared error.
    """

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("expected a square matrix")

    @property
    def n_trees(self) -> int:
        return self.values.shape[0]


def residual_gram(forest: Forest, dataset: Dataset, rows) -> ResidualGram:
    """Empirical residual-product matrix of the forest members on ``rows``."""
    rows = np.asarray(rows, dtype=np.int64)
    preds = member_predictions(forest, dataset, rows)
    residuals = (preds - dataset.labels[rows][None, :, :]).reshape(forest.n_trees, -1)
    values = residuals @ residuals.T / rows.size
    return ResidualGram((values + values.T) / 2.0)


def drop_member_report(gram: ResidualGram, k: int) -> dict:
    """How the mean ensemble error changes when member ``k`` is removed.

    Removing k helps when -2 * sum_{i != k} G[i, k] <= G[k, k], i.e. when
    the member's own squared error outweighs its (negative) correlation
    with the rest.
    """
    m = gram.n_trees
    if m < 2:
        raise ValueError("need at least 2 members to drop one")
    if not 0 <= k < m:
        raise ValueError(f"member index out of range: {k}")
    values = gram.values
    total = float(values.sum())
    without = np.delete(np.delete(values, k, axis=0), k, axis=1)
    cross = float(values[k].sum() - values[k, k])
    return {
        "avg_error_without_k": float(without.sum()) / (m - 1) ** 2,
        "avg_error_full": total / m**2,
        "condition_lhs": -2.0 * cross,
        "condition_rhs": float(values[k, k]),
        "condition_holds": bool(-2.0 * cross <= values[k, k]),
    }


def selection_to_json(selection: PruneSelection) -> dict:
    return {
        "selected": list(selection.selected),
        "K": selection.k,
        "method": selection.method,
        "seed": selection.seed,
    }


def selection_from_json(doc: dict, n_trees: int) -> PruneSelection:
    sel = _make_selection(doc["selected"], n_trees, doc.get("method", ""), doc.get("seed"))
    if sel.k != doc.get("K", sel.k):
        raise ValueError("K does not match the selected index list")
    return sel


def save_selection(selection: PruneSelection, path) -> None:
    with open(path, "w") as fh:
        json.dump(selection_to_json(selection), fh, indent=2)
        fh.write("\n")


def load_selection(path, n_trees: int) -> PruneSelection:
    with open(path) as fh:
        return selection_from_json(json.load(fh), n_trees)


# A pruner maps (forest, dataset, rows, k, seed) to a PruneSelection.
_PRUNERS = {
    "reduced-error": lambda forest, dataset, rows, k, seed: reduced_error_prune(forest, dataset, rows, k),
    "random": lambda forest, dataset, rows, k, seed: random_prune(forest, k, seed),
    "rank-ie": lambda forest, dataset, rows, k, seed: rank_prune_individual_error(forest, dataset, rows, k),
}


def register_pruner(name: str, fn) -> None:
    """Add an external selection method under ``name``.

    ``fn(forest, dataset, rows, k, seed)`` must return a PruneSelection.
    """
    if name in _PRUNERS:
        raise ValueError(f"pruner {name!r} already registered")
    _PRUNERS[name] = fn


def available_pruners() -> list[str]:
    return sorted(_PRUNERS)


def run_pruner(name: str, forest: Forest, dataset: Dataset, rows, k: int,
               seed: int = 0) -> PruneSelection:
    if name not in _PRUNERS:
        raise ValueError(f"unknown pruner {name!r}; available: {available_pruners()}")
    return _PRUNERS[name](forest, dataset, rows, k, seed)
