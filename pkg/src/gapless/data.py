"""Dataset representation with an explicit per-cell missingness mask.

A missing cell is represented by mask=False and carries no meaningful
value (ingestion stores NaN there). Numeric code must consult the mask
and never read a masked-out cell.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from ._validation import as_float_vector
from .exceptions import InvalidInputError, MemberUnusableError, UnscalableFeatureError

CLASSIFICATION = "classification"
REGRESSION = "regression"

_TASKS = (CLASSIFICATION, REGRESSION)


def _frozen_array(values, dtype) -> np.ndarray:
    a = np.array(values, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Instance:
    """A single row: feature values, a presence mask, and an optional target.

    ``mask[i]`` is True when feature i is observed. Masked-out positions
    hold NaN so that any accidental read poisons downstream arithmetic.
    """

    features: np.ndarray
    mask: np.ndarray
    target: object = None  # str label, float vector, or None

    def __post_init__(self):
        feats = _frozen_array(self.features, np.float64)
        mask = _frozen_array(self.mask, bool)
        if feats.ndim != 1 or mask.ndim != 1:
            raise InvalidInputError("features and mask must be 1-d")
        if feats.shape != mask.shape:
            raise InvalidInputError(
                f"features (len {feats.shape[0]}) and mask (len {mask.shape[0]}) "
                "must have identical length"
            )
        target = self.target
        if target is not None and not isinstance(target, str):
            target = _frozen_array(target, np.float64)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "target", target)

    @property
    def n_features(self) -> int:
        return self.features.shape[0]

    @property
    def is_complete(self) -> bool:
        return bool(self.mask.all())

    def present_indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def missing_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.mask)

    @staticmethod
    def complete(features, target=None) -> "Instance":
        feats = as_float_vector(features, "features")
        return Instance(feats, np.ones(feats.shape[0], dtype=bool), target)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of instances sharing one feature schema."""

    instances: tuple
    feature_names: tuple
    task: str
    class_labels: tuple | None = None
    target_names: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.class_labels is not None:
            object.__setattr__(self, "class_labels", tuple(self.class_labels))
        if self.target_names is not None:
            object.__setattr__(self, "target_names", tuple(self.target_names))
        if self.task not in _TASKS:
            raise InvalidInputError(f"task must be one of {_TASKS}, got {self.task!r}")
        n = len(self.feature_names)
        for i, inst in enumerate(self.instances):
            if inst.n_features != n:
                raise InvalidInputError(
                    f"instance {i} has {inst.n_features} features, expected {n}"
                )
            if self.task == CLASSIFICATION and inst.target is not None:
                if self.class_labels is None or inst.target not in self.class_labels:
                    raise InvalidInputError(
                        f"instance {i} target {inst.target!r} not in class_labels"
                    )

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def is_complete(self) -> bool:
        return all(inst.is_complete for inst in self.instances)

    def feature_matrix(self) -> np.ndarray:
        return np.array([inst.features for inst in self.instances], dtype=np.float64)

    def mask_matrix(self) -> np.ndarray:
        return np.array([inst.mask for inst in self.instances], dtype=bool)

    def targets(self) -> list:
        return [inst.target for inst in self.instances]

    def target_matrix(self) -> np.ndarray:
        if self.task != REGRESSION:
            raise InvalidInputError("target_matrix is only defined for regression")
        return np.array([inst.target for inst in self.instances], dtype=np.float64)

    def replace_instances(self, instances: Sequence[Instance]) -> "Dataset":
        return Dataset(
            tuple(instances),
            self.feature_names,
            self.task,
            self.class_labels,
            self.target_names,
        )

    @staticmethod
    def from_arrays(
        X,
        y=None,
        mask=None,
        feature_names=None,
        task: str = CLASSIFICATION,
        class_labels=None,
        target_names=None,
    ) -> "Dataset":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise InvalidInputError("X must be 2-d")
        if mask is None:
            mask = ~np.isnan(X)
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != X.shape:
            raise InvalidInputError("mask must have the same shape as X")
        if feature_names is None:
            feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
        if task == CLASSIFICATION and y is not None and class_labels is None:
            class_labels = tuple(sorted(set(y)))
        instances = []
        for i in range(X.shape[0]):
            target = None if y is None else y[i]
            instances.append(Instance(X[i], mask[i], target))
        return Dataset(tuple(instances), tuple(feature_names), task, class_labels, target_names)


@dataclass(frozen=True)
class FeatureSubset:
    """A sorted combination of feature indices used by one ensemble member."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(set(idx)) != len(idx):
            raise InvalidInputError("subset indices must be unique")
        if any(i < 0 for i in idx):
            raise InvalidInputError("subset indices must be non-negative")
        object.__setattr__(self, "indices", tuple(sorted(idx)))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def as_array(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.intp)

    def is_observed_in(self, mask: np.ndarray) -> bool:
        return bool(np.all(mask[list(self.indices)]))


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature min/max scaling to [0, 1], learned from observed training
    cells only.

    A degenerate range (min == max) maps every value to 0; out-of-range
    values are clipped so scaled data always lands in the unit interval.
    """

    minimum: np.ndarray
    maximum: np.ndarray
    feature_names: tuple | None = None

    def __post_init__(self):
        lo = _frozen_array(self.minimum, np.float64)
        hi = _frozen_array(self.maximum, np.float64)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidInputError("minimum and maximum must be 1-d and equal length")
        if np.any(lo > hi):
            raise InvalidInputError("scaler requires min <= max per feature")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_features(self) -> int:
        return self.minimum.shape[0]

    def transform(self, values, indices=None) -> np.ndarray:
        """Scale raw values for the given feature indices (all, if omitted)."""
        v = np.asarray(values, dtype=np.float64)
        if indices is None:
            lo, hi = self.minimum, self.maximum
        else:
            idx = np.asarray(indices, dtype=np.intp)
            lo, hi = self.minimum[idx], self.maximum[idx]
        span = hi - lo
        with np.errstate(invalid="ignore", divide="ignore"):
            scaled = np.where(span > 0.0, (v - lo) / span, 0.0)
        return np.clip(scaled, 0.0, 1.0)

    def transform_matrix(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        span = self.maximum - self.minimum
        with np.errstate(invalid="ignore", divide="ignore"):
            scaled = np.where(span > 0.0, (X - self.minimum) / span, 0.0)
        return np.clip(scaled, 0.0, 1.0)

    def inverse(self, scaled, indices=None) -> np.ndarray:
        """Map scaled [0, 1] values back to raw units."""
        s = np.asarray(scaled, dtype=np.float64)
        if indices is None:
            lo, hi = self.minimum, self.maximum
        else:
            idx = np.asarray(indices, dtype=np.intp)
            lo, hi = self.minimum[idx], self.maximum[idx]
        return lo + s * (hi - lo)

    def to_doc(self) -> dict:
        doc = {"minimum": self.minimum.tolist(), "maximum": self.maximum.tolist()}
        if self.feature_names is not None:
            doc["feature_names"] = list(self.feature_names)
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "FeatureScaler":
        return FeatureScaler(
            np.array(doc["minimum"], dtype=np.float64),
            np.array(doc["maximum"], dtype=np.float64),
            tuple(doc["feature_names"]) if "feature_names" in doc else None,
        )


def split(dataset: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded uniform shuffle followed by a prefix cut.

    Deterministic for a fixed seed; both halves are non-empty.
    """
    if len(dataset) < 2:
        raise InvalidInputError("split requires at least 2 instances")
    if not (0.0 < train_fraction < 1.0):
        raise InvalidInputError("train_fraction must lie strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset))
    n_train = int(round(train_fraction * len(dataset)))
    n_train = min(max(n_train, 1), len(dataset) - 1)
    first = [dataset.instances[i] for i in order[:n_train]]
    second = [dataset.instances[i] for i in order[n_train:]]
    return dataset.replace_instances(first), dataset.replace_instances(second)


def fit_scaler(train: Dataset) -> FeatureScaler:
    """Learn per-feature min/max from observed cells of the training set."""
    if len(train) == 0:
        raise InvalidInputError("cannot fit a scaler on an empty dataset")
    X = train.feature_matrix()
    mask = train.mask_matrix()
    n = train.n_features
    lo = np.empty(n)
    hi = np.empty(n)
    for j in range(n):
        observed = X[mask[:, j], j]
        if observed.size == 0:
            raise UnscalableFeatureError(train.feature_names[j])
        lo[j] = observed.min()
        hi[j] = observed.max()
    return FeatureScaler(lo, hi, train.feature_names)


def project(instance: Instance, subset: FeatureSubset, scaler: FeatureScaler) -> np.ndarray:
    """Extract the subset's feature values in index order, scaled to [0, 1].

    Raises MemberUnusableError when any subset feature is missing, which
    signals that the member owning this subset cannot vote on the instance.
    """
    idx = subset.as_array()
    if np.any(idx >= instance.n_features):
        raise InvalidInputError("subset index out of range for this instance")
    if not instance.mask[idx].all():
        missing = [int(i) for i in idx if not instance.mask[i]]
        raise MemberUnusableError(
            f"subset features {missing} are missing in this instance"
        )
    return scaler.transform(instance.features[idx], idx)


def _parse_cell(token: str):
    """A feature cell parses to (value, present); anything non-numeric or
    non-finite counts as missing."""
    token = token.strip()
    if not token:
        return np.nan, False
    try:
        value = float(token)
    except ValueError:
        return np.nan, False
    if not np.isfinite(value):
        return np.nan, False
    return value, True


def load_csv(path, task: str, target=None) -> Dataset:
    """Read a header-ed CSV into a Dataset.

    Empty or non-numeric feature cells become missing. ``target`` selects
    the target column(s) by name (string or list of strings); by default
    the last column is the target. Pass target="none" for a feature-only
    file.
    """
    if task not in _TASKS:
        raise InvalidInputError(f"task must be one of {_TASKS}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: empty CSV") from None
        rows = [row for row in reader if row]

    header = [h.strip() for h in header]
    if target == "none":
        target_cols: list[str] = []
    elif target is None:
        target_cols = [header[-1]]
    elif isinstance(target, str):
        target_cols = [t.strip() for t in target.split(",") if t.strip()]
    else:
        target_cols = list(target)
    for t in target_cols:
        if t not in header:
            raise InvalidInputError(f"target column {t!r} not found in {path}")
    if task == CLASSIFICATION and len(target_cols) > 1:
        raise InvalidInputError("classification expects a single target column")

    target_idx = [header.index(t) for t in target_cols]
    feature_idx = [i for i in range(len(header)) if i not in target_idx]
    feature_names = tuple(header[i] for i in feature_idx)

    instances = []
    labels = set()
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise InvalidInputError(
                f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}"
            )
        feats = np.empty(len(feature_idx))
        mask = np.empty(len(feature_idx), dtype=bool)
        for k, i in enumerate(feature_idx):
            feats[k], mask[k] = _parse_cell(row[i])
        if not target_cols:
            tgt = None
        elif task == CLASSIFICATION:
            raw = row[target_idx[0]].strip()
            tgt = raw if raw else None
            if tgt is not None:
                labels.add(tgt)
        else:
            vals = [_parse_cell(row[i]) for i in target_idx]
            tgt = np.array([v for v, _ in vals]) if all(p for _, p in vals) else None
        instances.append(Instance(feats, mask, tgt))

    class_labels = tuple(sorted(labels)) if task == CLASSIFICATION and labels else None
    target_names = tuple(target_cols) if target_cols else None
    return Dataset(tuple(instances), feature_names, task, class_labels, target_names)


def save_csv(dataset: Dataset, path, extra_columns: dict | None = None) -> None:
    """Write a Dataset back to CSV; missing cells become empty cells.

    ``extra_columns`` maps a column name to a per-row list appended after
    the target column(s).
    """
    extra = extra_columns or {}
    for name, column in extra.items():
        if len(column) != len(dataset):
            raise InvalidInputError(f"extra column {name!r} has wrong length")
    if dataset.target_names is not None:
        target_names = list(dataset.target_names)
    else:
        target_names = ["target"] if any(i.target is not None for i in dataset) else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + target_names + list(extra))
        for r, inst in enumerate(dataset):
            cells = [
                repr(float(v)) if m else ""
                for v, m in zip(inst.features, inst.mask)
            ]
            if target_names:
                if inst.target is None:
                    cells.extend([""] * len(target_names))
                elif isinstance(inst.target, str):
                    cells.append(inst.target)
                else:
                    cells.extend(repr(float(v)) for v in np.atleast_1d(inst.target))
            cells.extend(str(extra[name][r]) for name in extra)
            writer.writerow(cells)
