"""Tabular datasets: CSV loading, class filtering, holdout splits, bootstraps.

A :class:`Dataset` is an immutable pair of a numeric feature matrix and a
dense integer label vector.  Labels are always ``0..K-1`` with every class
present; the original label values survive in ``class_names`` so reports can
map estimates back to the caller's vocabulary.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

# Shuffles attempted before giving up on a holdout split that keeps every
# class present on both sides.
MAX_SPLIT_ATTEMPTS = 100


@dataclass(frozen=True)
class Dataset:
    """Numeric feature matrix with dense integer class labels.

    Attributes:
        features: float64 array of shape (num_examples, num_features).
        labels: int64 array of shape (num_examples,) with values in
            ``0..num_classes-1``; every class occurs at least once.
        num_classes: number of distinct classes K (>= 2 for all estimators,
            though the container itself only requires >= 1).
        feature_names: optional column names, parallel to feature columns.
        class_names: optional original label values, indexed by dense label.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    feature_names: tuple[str, ...] | None = None
    class_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        features = np.ascontiguousarray(self.features, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {features.shape}")
        n, d = features.shape
        if n < 1 or d < 1:
            raise DataError(f"dataset needs at least one row and one column, got {features.shape}")
        if labels.shape != (n,):
            raise DataError(f"labels shape {labels.shape} does not match {n} rows")
        if np.isnan(features).any():
            raise DataError("features contain NaN; missing values are not supported")
        if self.num_classes < 1:
            raise DataError(f"num_classes must be >= 1, got {self.num_classes}")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise DataError("labels must lie in 0..num_classes-1")
        present = np.bincount(labels, minlength=self.num_classes)
        if (present == 0).any():
            missing = int(np.flatnonzero(present == 0)[0])
            raise DataError(f"class {missing} has no examples")
        if self.feature_names is not None and len(self.feature_names) != d:
            raise DataError("feature_names length does not match feature columns")
        if self.class_names is not None and len(self.class_names) != self.num_classes:
            raise DataError("class_names length does not match num_classes")
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def num_examples(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        """Examples per class, indexed by dense label."""
        return np.bincount(self.labels, minlength=self.num_classes)

    def priors(self) -> np.ndarray:
        """Class frequencies; strictly positive and summing to 1."""
        return self.class_counts() / self.num_examples

    def subset(self, indices: np.ndarray) -> "Dataset":
        """Dataset restricted to ``indices`` (labels and names preserved)."""
        return Dataset(
            self.features[indices],
            self.labels[indices],
            self.num_classes,
            self.feature_names,
            self.class_names,
        )

    def digest(self) -> str:
        """Short content hash, stable across runs of the same data."""
        h = hashlib.sha256()
        h.update(self.features.tobytes())
        h.update(self.labels.tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class BootstrapSample:
    """One stratified bootstrap draw over a training set.

    ``in_bag`` lists the drawn training indices *with repetition* (its length
    equals the training-set size); ``out_bag`` is the sorted set of indices
    that were never drawn.
    """

    in_bag: np.ndarray
    out_bag: np.ndarray

    def __post_init__(self) -> None:
        in_bag = np.ascontiguousarray(self.in_bag, dtype=np.int64)
        out_bag = np.ascontiguousarray(self.out_bag, dtype=np.int64)
        in_bag.setflags(write=False)
        out_bag.setflags(write=False)
        object.__setattr__(self, "in_bag", in_bag)
        object.__setattr__(self, "out_bag", out_bag)


def _cell(text: str) -> str:
    return text.strip()


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path: str | Path, label_column: int | str) -> Dataset:
    """Load a comma-separated file into a :class:`Dataset`.

    The label column is selected by zero-based index or by header name.  A
    header row is assumed present iff the first row contains any non-numeric
    cell outside the label column (selecting the label by name requires one).
    Labels are kept as opaque strings and re-indexed densely, in order of
    first appearance; the original values are recorded in ``class_names``.

    Raises:
        DataError: on unreadable files, ragged rows, missing or non-numeric
            feature cells (the offending line and column are named), unknown
            label columns, or files with fewer than two distinct classes.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [[_cell(c) for c in row] for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")

    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: line {i + 1} has {len(row)} cells, expected {width}")

    if isinstance(label_column, str):
        header = rows[0]
        if label_column not in header:
            raise DataError(f"{path}: no column named {label_column!r} in header {header}")
        label_idx = header.index(label_column)
        has_header = True
    else:
        label_idx = int(label_column)
        if not 0 <= label_idx < width:
            raise DataError(f"{path}: label column {label_idx} out of range for {width} columns")
        has_header = any(
            not _is_number(c) for j, c in enumerate(rows[0]) if j != label_idx
        )

    names = rows[0] if has_header else None
    data_rows = rows[1:] if has_header else rows
    first_line = 2 if has_header else 1
    if not data_rows:
        raise DataError(f"{path} has a header but no data rows")

    feature_cols = [j for j in range(width) if j != label_idx]
    if not feature_cols:
        raise DataError(f"{path}: no feature columns besides the label")

    features = np.empty((len(data_rows), len(feature_cols)), dtype=np.float64)
    label_of: dict[str, int] = {}
    labels = np.empty(len(data_rows), dtype=np.int64)
    for i, row in enumerate(data_rows):
        line = first_line + i
        for out_j, j in enumerate(feature_cols):
            cell = row[j]
            if cell == "":
                raise DataError(f"{path}: missing value at line {line}, column {j + 1}")
            try:
                features[i, out_j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell!r} at line {line}, column {j + 1}"
                ) from None
        raw = row[label_idx]
        if raw == "":
            raise DataError(f"{path}: missing label at line {line}, column {label_idx + 1}")
        if raw not in label_of:
            label_of[raw] = len(label_of)
        labels[i] = label_of[raw]

    if len(label_of) < 2:
        raise DataError(f"{path}: found a single class {list(label_of)}; need at least two")

    feature_names = tuple(names[j] for j in feature_cols) if names else None
    class_names = tuple(label_of)  # insertion order == dense label order
    return Dataset(features, labels, len(label_of), feature_names, class_names)


def load_features_csv(path: str | Path) -> tuple[np.ndarray, tuple[str, ...] | None]:
    """Load an unlabeled comma-separated file as a bare feature matrix.

    Header detection and error reporting mirror :func:`load_csv`; every cell
    must be numeric.  Returns (features, feature_names-or-None).
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [[_cell(c) for c in row] for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"{path}: line {i + 1} has {len(row)} cells, expected {width}")
    has_header = any(not _is_number(c) for c in rows[0])
    names = tuple(rows[0]) if has_header else None
    data_rows = rows[1:] if has_header else rows
    first_line = 2 if has_header else 1
    if not data_rows:
        raise DataError(f"{path} has a header but no data rows")
    features = np.empty((len(data_rows), width), dtype=np.float64)
    for i, row in enumerate(data_rows):
        for j, cell in enumerate(row):
            if cell == "":
                raise DataError(f"{path}: missing value at line {first_line + i}, column {j + 1}")
            try:
                features[i, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell!r} at line {first_line + i}, column {j + 1}"
                ) from None
    return features, names


def _resolve_class(d: Dataset, ident: int | str) -> int:
    if d.class_names is not None:
        key = str(ident)
        if key in d.class_names:
            return d.class_names.index(key)
        raise DataError(f"unknown class {ident!r}; dataset classes are {list(d.class_names)}")
    try:
        idx = int(ident)
    except ValueError:
        raise DataError(f"unknown class {ident!r}; dataset classes are 0..{d.num_classes - 1}") from None
    if not 0 <= idx < d.num_classes:
        raise DataError(f"class index {idx} out of range for {d.num_classes} classes")
    return idx


def filter_classes(d: Dataset, keep: Sequence[int | str]) -> Dataset:
    """Restrict ``d`` to two classes and remap them to labels 0 and 1.

    ``keep`` names two distinct classes by their original identifiers (the
    values in ``class_names``) or, for datasets without names, by dense label.
    The first kept class becomes 0 and the second becomes 1.
    """
    if len(keep) != 2:
        raise DataError(f"keep must name exactly two classes, got {list(keep)}")
    a = _resolve_class(d, keep[0])
    b = _resolve_class(d, keep[1])
    if a == b:
        raise DataError(f"keep must name two distinct classes, got {list(keep)}")
    mask = (d.labels == a) | (d.labels == b)
    labels = np.where(d.labels[mask] == a, 0, 1)
    class_names = (d.class_names[a], d.class_names[b]) if d.class_names else None
    return Dataset(d.features[mask], labels, 2, d.feature_names, class_names)


def holdout_split(
    d: Dataset, test_fraction: float, rng: np.random.Generator
) -> tuple[Dataset, Dataset]:
    """Random (train, test) partition with ``round(test_fraction * N)`` test rows.

    Both partitions must contain at least one example of every class; the
    shuffle is retried up to ``MAX_SPLIT_ATTEMPTS`` times before raising.  The
    split is a pure function of the dataset and the generator state.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = d.num_examples
    n_test = int(round(test_fraction * n))
    if n_test < d.num_classes or n - n_test < d.num_classes:
        raise DataError(
            f"cannot split {n} examples of {d.num_classes} classes with "
            f"test_fraction={test_fraction}: a partition would miss a class"
        )
    for _ in range(MAX_SPLIT_ATTEMPTS):
        perm = rng.permutation(n)
        test_idx, train_idx = perm[:n_test], perm[n_test:]
        k = d.num_classes
        if (np.bincount(d.labels[test_idx], minlength=k) > 0).all() and (
            np.bincount(d.labels[train_idx], minlength=k) > 0
        ).all():
            return d.subset(train_idx), d.subset(test_idx)
    raise DataError(
        f"no class-covering split found in {MAX_SPLIT_ATTEMPTS} shuffles "
        f"(N={n}, K={d.num_classes}, test_fraction={test_fraction})"
    )


def stratified_bootstrap(train: Dataset, rng: np.random.Generator) -> BootstrapSample:
    """Per-class bootstrap: draw N_k examples of each class k, with replacement.

    The in-bag multiset therefore reproduces the training priors exactly.
    Indices never drawn form the out-of-bag set (about 37% of the training
    set in expectation).
    """
    draws = [
        rng.choice(np.flatnonzero(train.labels == k), size=count, replace=True)
        for k, count in enumerate(train.class_counts())
    ]
    in_bag = np.concatenate(draws)
    out_bag = np.setdiff1d(np.arange(train.num_examples), in_bag)
    return BootstrapSample(in_bag, out_bag)
