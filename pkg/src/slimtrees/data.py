"""Dataset ingestion, preprocessing and cross-validation splits."""

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from .seeding import derive_rng

# Cell contents (after stripping whitespace) treated as a missing value.
MISSING_MARKERS = frozenset({"", "NaN", "nan", "NA"})


@dataclass
class Dataset:
    """Dense feature matrix paired with one-hot labels.

    features is (N, d) float64 with only finite entries; labels is (N, C)
    with exactly one 1 per row. class_names maps label column index back to
    the original label value when the dataset came from a CSV.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str]
    class_names: list[str] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2 or self.labels.ndim != 2:
            raise ValueError("features and labels must be 2-dimensional")
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ValueError("dataset needs at least one row and one feature")
        if self.labels.shape[0] != n:
            raise ValueError("features and labels disagree on the number of rows")
        if self.labels.shape[1] < 2:
            raise ValueError("need at least 2 classes")
        if not np.isfinite(self.features).all():
            raise ValueError("features contain NaN or infinite values")
        one_hot = np.isin(self.labels, (0.0, 1.0)).all() and (self.labels.sum(axis=1) == 1.0).all()
        if not one_hot:
            raise ValueError("labels must be one-hot rows")
        if len(self.feature_names) != d:
            raise ValueError("feature_names length must match feature count")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return self.labels.shape[1]

    @property
    def label_indices(self) -> np.ndarray:
        """Class index per row (argmax of the one-hot rows)."""
        return np.argmax(self.labels, axis=1)


@dataclass
class FoldSplit:
    """One cross-validation fold: disjoint train/test row indices."""

    train_indices: np.ndarray
    test_indices: np.ndarray

    def __post_init__(self):
        self.train_indices = np.asarray(self.train_indices, dtype=np.int64)
        self.test_indices = np.asarray(self.test_indices, dtype=np.int64)


def _is_missing(cell: str) -> bool:
    return cell.strip() in MISSING_MARKERS


def _sort_values(values):
    """Sort distinct string values numerically when possible, else lexicographically."""
    try:
        return sorted(values, key=lambda v: (float(v), v))
    except ValueError:
        return sorted(values)


def load_csv(path, label_column: str, categorical_columns=()) -> Dataset:
    """Load a headered CSV into a Dataset.

    Rows containing a missing cell are dropped. Each categorical column is
    expanded into one indicator column per distinct value (sorted value
    order, inserted at the original column position); the label column
    becomes a one-hot matrix over its distinct values.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        raw_rows = [row for row in reader if row]

    header = [h.strip() for h in header]
    if label_column not in header:
        raise ValueError(f"label column {label_column!r} not found in {header}")
    categorical = set(categorical_columns)
    unknown = categorical - set(header)
    if unknown:
        raise ValueError(f"categorical columns not in header: {sorted(unknown)}")
    label_pos = header.index(label_column)

    kept = []
    for row in raw_rows:
        if len(row) != len(header):
            raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
        if not any(_is_missing(cell) for cell in row):
            kept.append([cell.strip() for cell in row])
    if not kept:
        raise ValueError("no rows left after dropping rows with missing values")

    class_names = _sort_values({row[label_pos] for row in kept})
    if len(class_names) < 2:
        raise ValueError(f"need at least 2 distinct labels, got {class_names}")
    class_index = {v: i for i, v in enumerate(class_names)}

    # Indicator columns use plain lexicographic value order.
    categories = {
        col: sorted({row[header.index(col)] for row in kept}) for col in categorical
    }

    feature_names = []
    columns = []
    for pos, col in enumerate(header):
        if pos == label_pos:
            continue
        cells = [row[pos] for row in kept]
        if col in categorical:
            for value in categories[col]:
                feature_names.append(f"{col}={value}")
                columns.append(np.array([1.0 if c == value else 0.0 for c in cells]))
        else:
            try:
                parsed = np.array([float(c) for c in cells])
            except ValueError as exc:
                raise ValueError(f"column {col!r} is not numeric: {exc}") from None
            if not np.isfinite(parsed).all():
                raise ValueError(f"column {col!r} contains non-finite values")
            feature_names.append(col)
            columns.append(parsed)
    if not columns:
        raise ValueError("dataset has no feature columns")

    labels = np.zeros((len(kept), len(class_names)))
    for i, row in enumerate(kept):
        labels[i, class_index[row[label_pos]]] = 1.0
    return Dataset(np.column_stack(columns), labels, feature_names, class_names)


def kfold(dataset: Dataset, k: int, seed: int) -> list[FoldSplit]:
    """Split rows into k folds after a seeded shuffle.

    Fold test sizes differ by at most one; the test sets partition
    0..N-1. Identical (dataset, k, seed) yields identical folds.
    """
    n = dataset.n_rows
    if k < 2 or k > n:
        raise ValueError(f"k must be in [2, {n}], got {k}")
    perm = derive_rng(seed).permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        test = np.sort(perm[start : start + size])
        train = np.sort(np.concatenate([perm[:start], perm[start + size :]]))
        folds.append(FoldSplit(train_indices=train, test_indices=test))
        start += size
    return folds


def dataset_to_json(dataset: Dataset) -> dict:
    return {
        "features": dataset.features.tolist(),
        "labels": dataset.labels.tolist(),
        "n_classes": dataset.n_classes,
        "feature_names": list(dataset.feature_names),
    }


def dataset_from_json(doc: dict) -> Dataset:
    ds = Dataset(
        np.asarray(doc["features"], dtype=np.float64),
        np.asarray(doc["labels"], dtype=np.float64),
        list(doc["feature_names"]),
    )
    if ds.n_classes != doc["n_classes"]:
        raise ValueError("n_classes does not match the label matrix width")
    return ds


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w") as fh:
        json.dump(dataset_to_json(dataset), fh)


def load_dataset(path) -> Dataset:
    with open(path) as fh:
        return dataset_from_json(json.load(fh))
