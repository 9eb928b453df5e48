"""Post-hoc SGD on the leaf prediction vectors of a fixed-structure sub-forest.

Split structure is frozen (axis-aligned tests are not differentiable);
only the constant leaf vectors of the selected trees move. The selected
members are averaged with uniform weights during refinement.
"""

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .forest import Forest, Tree, predict_rows
from .seeding import derive_rng

LOSSES = ("mse",)


@dataclass
class RefineConfig:
    """SGD hyperparameters. Defaults follow the standard recipe
    (constant step size 0.1, 50 epochs, batches of 128, squared error)."""

    step_size: float = 0.1
    epochs: int = 50
    batch_size: int = 128
    loss: str = "mse"
    seed: int = 0
    full_batch_mode: bool = False

    def __post_init__(self):
        if self.step_size < 0:
            raise ValueError("step_size must be non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.loss not in LOSSES:
            raise ValueError(f"unsupported loss {self.loss!r}; available: {LOSSES}")


def _leaf_ordinals(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Position of each row's leaf within the tree's ordered leaf list."""
    leaf_nodes = tree.leaf_node_ids()
    return np.searchsorted(leaf_nodes, tree.apply(X))


def _scatter_rows(values: np.ndarray, ordinals: np.ndarray, n_bins: int) -> np.ndarray:
    """Sum the rows of ``values`` into ``n_bins`` groups given by ``ordinals``."""
    out = np.empty((n_bins, values.shape[1]))
    for c in range(values.shape[1]):
        out[:, c] = np.bincount(ordinals, weights=values[:, c], minlength=n_bins)
    return out


def training_loss(forest: Forest, subset, dataset: Dataset, rows) -> float:
    """Mean squared L2 distance between the averaged prediction and the one-hot label."""
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("rows is empty")
    f = predict_rows(forest, dataset.features[rows], subset)
    return float(np.mean(np.sum((f - dataset.labels[rows]) ** 2, axis=1)))


def leaf_gradient(forest: Forest, subset, batch, dataset: Dataset) -> dict[int, np.ndarray]:
    """Per-leaf gradient of the mean batch loss for every tree in ``subset``.

    With squared error the residual is 2*(f(x) - y) where f averages the
    subset members uniformly; each batch point contributes its residual,
    scaled by the uniform member weight, to the one leaf it reaches per
    tree. Leaves that receive no batch point get a zero gradient. Returns
    {tree index: (n_leaves, C) array} with leaves in node order.
    """
    subset = sorted(int(i) for i in subset)
    if not subset:
        raise ValueError("subset is empty")
    batch = np.asarray(batch, dtype=np.int64)
    if batch.size == 0:
        raise ValueError("batch is empty")
    X = dataset.features[batch]
    k = len(subset)

    f = np.zeros((batch.size, forest.n_classes))
    ordinals = {}
    for i in subset:
        tree = forest.trees[i]
        ordinals[i] = _leaf_ordinals(tree, X)
        f += tree.leaf_values[tree.leaf_node_ids()][ordinals[i]]
    f /= k

    residual = 2.0 * (f - dataset.labels[batch])
    scale = 1.0 / (k * batch.size)
    return {
        i: scale * _scatter_rows(residual, ordinals[i], forest.trees[i].n_leaves)
        for i in subset
    }


def refine_leaves(forest: Forest, subset, dataset: Dataset, rows,
                  config: RefineConfig) -> Forest:
    """Run mini-batch SGD over the leaf vectors of the ``subset`` trees.

    Per epoch the rows are reshuffled (seeded by (config.seed, epoch)) and
    consumed in consecutive batches of at most ``batch_size``; every batch
    applies one synchronous step to all subset trees. In full-batch mode
    each epoch is a single step over all rows. The input forest is left
    untouched; the returned copy carries uniform 1/K weights on the subset
    and zeros elsewhere.
    """
    subset = sorted(int(i) for i in subset)
    if not subset:
        raise ValueError("subset is empty")
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("rows is empty")

    X = dataset.features[rows]
    Y = dataset.labels[rows]
    k = len(subset)

    trees = [t.copy() for t in forest.trees]
    leaf_nodes = {i: trees[i].leaf_node_ids() for i in subset}
    theta = {i: trees[i].leaf_values[leaf_nodes[i]].copy() for i in subset}
    ordinals = {i: _leaf_ordinals(trees[i], X) for i in subset}

    n = rows.size
    for epoch in range(config.epochs):
        if config.full_batch_mode:
            batches = [np.arange(n)]
        else:
            perm = derive_rng(config.seed, epoch).permutation(n)
            batches = [perm[s : s + config.batch_size] for s in range(0, n, config.batch_size)]
        for batch in batches:
            f = np.zeros((batch.size, forest.n_classes))
            for i in subset:
                f += theta[i][ordinals[i][batch]]
            f /= k
            residual = 2.0 * (f - Y[batch])
            step = config.step_size / (k * batch.size)
            for i in subset:
                grad = _scatter_rows(residual, ordinals[i][batch], theta[i].shape[0])
                theta[i] -= step * grad

    for i in subset:
        trees[i].leaf_values[leaf_nodes[i]] = theta[i]
    weights = np.zeros(forest.n_trees)
    weights[subset] = 1.0 / k
    return Forest(trees, weights)
