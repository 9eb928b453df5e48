"""Seeded synthetic classification data for tests, demos and benchmarks."""

import numpy as np

from .data import Dataset
from .seeding import derive_rng


def make_synthetic(n_rows: int, n_features: int = 10, n_classes: int = 2,
                   label_noise: float = 0.1, seed: int = 0) -> Dataset:
    """Gaussian features with a smooth nonlinear score as the label signal.

    The score mixes periodic, product and quadratic terms, so axis-aligned
    trees approximate it only with many leaves: small trees underfit with
    real variance between bootstrap replicates, which is the regime where
    member selection and leaf refinement have something to improve. Labels
    are balanced quantile bins of the score; ``label_noise`` is the
    probability of replacing a label with a uniformly random other class.
    """
    if n_rows < 1 or n_features < 3 or n_classes < 2:
        raise ValueError("need n_rows >= 1, n_features >= 3, n_classes >= 2")
    if not 0.0 <= label_noise < 1.0:
        raise ValueError("label_noise must be in [0, 1)")
    rng = derive_rng(seed)
    X = rng.normal(size=(n_rows, n_features))

    score = np.sin(2.0 * X[:, 0]) + X[:, 1] * X[:, 2]
    if n_features >= 4:
        score += 0.8 * np.cos(2.0 * X[:, 3])
    if n_features >= 5:
        score += 0.5 * X[:, 4] ** 2
    edges = np.quantile(score, np.linspace(0.0, 1.0, n_classes + 1)[1:-1])
    y = np.digitize(score, edges)

    flip = rng.random(n_rows) < label_noise
    offsets = rng.integers(1, n_classes, size=n_rows)
    y = np.where(flip, (y + offsets) % n_classes, y)

    labels = np.zeros((n_rows, n_classes))
    labels[np.arange(n_rows), y] = 1.0
    names = [f"x{j}" for j in range(n_features)]
    return Dataset(X, labels, names)
