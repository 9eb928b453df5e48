"""Shared builders for hand-crafted trees, forests and datasets."""

import numpy as np
import pytest

from slimtrees.data import Dataset
from slimtrees.forest import Forest, tree_from_json


def leaf(p):
    return {"leaf": {"p": list(p)}}


def split(f, t, l, r):
    return {"split": {"f": f, "t": t, "l": l, "r": r}}


def build_tree(nodes, n_classes, root=0):
    return tree_from_json({"nodes": nodes, "root": root}, n_classes)


def build_forest(tree_specs, n_classes):
    trees = [build_tree(nodes, n_classes) for nodes in tree_specs]
    return Forest(trees)


def constant_tree(p):
    """Single-leaf tree that predicts ``p`` everywhere."""
    return [leaf(p)]


def stump(feature, threshold, p_left, p_right):
    """One split with two leaves."""
    return [split(feature, threshold, 1, 2), leaf(p_left), leaf(p_right)]


@pytest.fixture
def four_row_dataset():
    """Two features, two classes; labels follow x0 <= 0.5."""
    X = np.array([[0.0, 1.0], [0.2, -1.0], [0.8, 0.5], [1.0, 2.0]])
    Y = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    return Dataset(X, Y, ["x0", "x1"])
