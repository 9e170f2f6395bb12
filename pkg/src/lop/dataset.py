"""Loading, validating, de-duplicating and resampling labeled numeric tables."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import DataError


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with integer class labels in ``1..G``.

    ``class_names[g - 1]`` is the original label of class ``g``;
    ``feature_names`` are the CSV column headers (or generated names).
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple = ()
    feature_names: tuple = ()
    row_ids: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        y = np.array(self.labels)
        if X.ndim != 2:
            raise DataError(f"features must be 2-d, got shape {X.shape}")
        if X.shape[0] == 0:
            raise DataError("dataset is empty")
        if y.shape != (X.shape[0],):
            raise DataError(f"labels must have length {X.shape[0]}, got shape {y.shape}")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        if not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise DataError("labels must be integers 1..G")
        y = y.astype(np.int64)
        G = int(y.max())
        if y.min() < 1 or np.unique(y).size != G:
            raise DataError("labels must cover every value in 1..G")
        names = tuple(self.class_names) or tuple(str(g) for g in range(1, G + 1))
        if len(names) != G:
            raise DataError(f"expected {G} class names, got {len(names)}")
        fnames = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(fnames) != X.shape[1]:
            raise DataError(f"expected {X.shape[1]} feature names, got {len(fnames)}")
        rows = np.arange(X.shape[0]) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64)
        X.setflags(write=False)
        y.setflags(write=False)
        rows.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "feature_names", fnames)
        object.__setattr__(self, "row_ids", rows)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def group_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]

    def subset(self, index) -> "LabeledDataset":
        """Rows ``index`` as a new dataset with the same label vocabulary."""
        index = np.asarray(index, dtype=np.int64)
        return LabeledDataset(
            self.features[index], self.labels[index], self.class_names,
            self.feature_names, self.row_ids[index],
        )


@dataclass(frozen=True)
class ResamplePlan:
    """Stratified train/test resampling scheme.

    Exactly one of ``fraction`` (per-group training share in (0, 1)) and
    ``counts`` (explicit per-group training sizes) must be given.
    """

    fraction: float | None = None
    counts: tuple | None = None
    repetitions: int = 1
    seed: int = 0

    def __post_init__(self):
        if (self.fraction is None) == (self.counts is None):
            raise DataError("give exactly one of fraction or counts")
        if self.fraction is not None and not 0.0 < self.fraction < 1.0:
            raise DataError(f"fraction must lie in (0, 1), got {self.fraction}")
        if self.counts is not None:
            object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if int(self.repetitions) < 1:
            raise DataError("repetitions must be >= 1")
        object.__setattr__(self, "repetitions", int(self.repetitions))
        object.__setattr__(self, "seed", int(self.seed))

    def train_counts(self, group_counts: Sequence[int]) -> np.ndarray:
        """Per-group training sizes; fractional sizes are rounded half down."""
        group_counts = np.asarray(group_counts, dtype=np.int64)
        if self.counts is not None:
            counts = np.asarray(self.counts, dtype=np.int64)
            if counts.shape != group_counts.shape:
                raise DataError(
                    f"plan has {counts.size} group counts, dataset has {group_counts.size} groups"
                )
            if np.any(counts > group_counts):
                raise DataError(f"train counts {counts.tolist()} exceed group sizes {group_counts.tolist()}")
        else:
            counts = np.array([round_half_down(self.fraction * c) for c in group_counts], dtype=np.int64)
        bad = np.flatnonzero((counts <= 0) | (counts >= group_counts))
        if bad.size:
            g = int(bad[0])
            raise DataError(
                f"group {g + 1}: {counts[g]} of {group_counts[g]} observations for training "
                "leaves one side of the split empty"
            )
        return counts


def round_half_down(x: float) -> int:
    # Round first so that e.g. 0.8 * 34 = 27.200000000000003 is not perturbed.
    return int(math.ceil(round(x, 9) - 0.5))


def load_csv(path, label_column: str) -> LabeledDataset:
    """Read a comma-separated table with a header row.

    Labels are re-encoded to ``1..G`` in order of first appearance; the
    original values are kept in ``class_names``.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not found in header {header}")
        label_idx = header.index(label_column)
        feature_cols = [j for j in range(len(header)) if j != label_idx]
        rows, raw_labels = [], []
        for line_no, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise DataError(f"{path}: line {line_no} has {len(record)} fields, expected {len(header)}")
            values = []
            for j in feature_cols:
                try:
                    values.append(float(record[j]))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {record[j]!r} at line {line_no}, column {header[j]!r}"
                    ) from None
            rows.append(values)
            raw_labels.append(record[label_idx].strip())
    if not rows:
        raise DataError(f"{path}: no data rows")
    names: dict[str, int] = {}
    for lab in raw_labels:
        names.setdefault(lab, len(names) + 1)
    labels = np.array([names[lab] for lab in raw_labels], dtype=np.int64)
    X = np.array(rows, dtype=float)
    if not np.all(np.isfinite(X)):
        r, c = np.argwhere(~np.isfinite(X))[0]
        raise DataError(f"{path}: non-finite value at line {r + 2}, column {header[feature_cols[c]]!r}")
    return LabeledDataset(
        X, labels, tuple(names), tuple(header[j] for j in feature_cols)
    )


def preprocess(ds: LabeledDataset) -> tuple[LabeledDataset, np.ndarray]:
    """Collapse exact duplicate rows; returns the cleaned dataset and removed row positions.

    The first occurrence of a duplicated row is kept. Duplicates carrying
    different labels raise :class:`DataError`.
    """
    seen: dict[bytes, int] = {}
    removed = []
    for i, row in enumerate(ds.features):
        key = row.tobytes()
        first = seen.get(key)
        if first is None:
            seen[key] = i
        elif ds.labels[first] != ds.labels[i]:
            raise DataError(
                f"rows {first} and {i} have identical features but labels "
                f"{ds.class_names[ds.labels[first] - 1]!r} and {ds.class_names[ds.labels[i] - 1]!r}"
            )
        else:
            removed.append(i)
    removed = np.array(removed, dtype=np.int64)
    if removed.size == 0:
        return ds, removed
    keep = np.setdiff1d(np.arange(ds.n), removed)
    return ds.subset(keep), removed


def split_indices(ds: LabeledDataset, plan: ResamplePlan, rep: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted row positions of the training and test part of repetition ``rep`` (1-based)."""
    if not 1 <= rep <= plan.repetitions:
        raise DataError(f"repetition {rep} outside 1..{plan.repetitions}")
    counts = plan.train_counts(ds.group_counts)
    rng = np.random.default_rng([plan.seed & 0xFFFFFFFFFFFFFFFF, rep])
    train = []
    for g, c in enumerate(counts, start=1):
        members = np.flatnonzero(ds.labels == g)
        train.append(rng.choice(members, size=int(c), replace=False))
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(ds.n), train)
    return train, test


def stratified_resample(ds: LabeledDataset, plan: ResamplePlan, rep: int) -> tuple[LabeledDataset, LabeledDataset]:
    train, test = split_indices(ds, plan, rep)
    return ds.subset(train), ds.subset(test)


def write_split_manifest(ds: LabeledDataset, plan: ResamplePlan, path) -> None:
    """Write every repetition's split as rows ``(repetition, row_index, role)``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["repetition", "row_index", "role"])
        for rep in range(1, plan.repetitions + 1):
            train, _ = split_indices(ds, plan, rep)
            is_train = np.zeros(ds.n, dtype=bool)
            is_train[train] = True
            for i in range(ds.n):
                writer.writerow([rep, int(ds.row_ids[i]), "train" if is_train[i] else "test"])
