"""Tabular data: containers, synthesis, CSV ingestion, splitting and statistics."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng as _rng
from .errors import (
    InvalidArgumentError,
    MissingFileError,
    MulticlassUnsupportedError,
    NoFeaturesError,
    ParseError,
)

LABEL_COLUMN = "label"


class NonNumericColumnError(ParseError):
    """A feature column holds no numeric values at all."""


def as_vector(x, dimension: int | None = None) -> np.ndarray:
    """Validate a feature vector: 1-D, finite, optionally of a given length."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidArgumentError(f"feature vector must be 1-D and nonempty, got shape {v.shape}")
    if dimension is not None and v.size != dimension:
        raise InvalidArgumentError(f"dimension mismatch: expected {dimension}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError("feature vector contains NaN or Inf")
    return v


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Dense numeric rows with binary labels.

    ``X`` has shape ``(n, d)``; ``y`` holds 0/1 labels. Arrays are copied and
    made read-only on construction.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidArgumentError(f"rows must form a nonempty (n, d) array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("dataset contains NaN or Inf")
        if y.shape != (X.shape[0],):
            raise InvalidArgumentError("one label per row required")
        if not np.all((y == 0) | (y == 1)):
            raise InvalidArgumentError("labels must be 0 or 1")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise InvalidArgumentError("one feature name per column required")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y.astype(np.int64)))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], self.feature_names)

    def has_both_classes(self) -> bool:
        return bool(np.any(self.y == 0) and np.any(self.y == 1))


@dataclass(frozen=True)
class FeatureStats:
    means: np.ndarray
    std_devs: np.ndarray

    @property
    def dimension(self) -> int:
        return self.means.size


def generate_half_moons(n: int = 1000, noise: float = 0.3, seed: int = 0) -> Dataset:
    """Two interleaving half circles.

    Class 0 lies on the upper unit arc around ``(0, 0)``; class 1 on the
    lower unit arc around ``(1, 0.5)``. Arc positions are evenly spaced, then
    every coordinate gets Gaussian noise of std ``noise`` and the rows are
    shuffled.
    """
    if n < 2:
        raise InvalidArgumentError("half-moons needs n >= 2")
    if noise < 0 or not math.isfinite(noise):
        raise InvalidArgumentError("noise must be a nonnegative real")
    n_upper = n // 2
    n_lower = n - n_upper
    t_upper = np.linspace(0.0, np.pi, n_upper)
    t_lower = np.linspace(0.0, np.pi, n_lower)
    upper = np.column_stack([np.cos(t_upper), np.sin(t_upper)])
    lower = np.column_stack([1.0 - np.cos(t_lower), 0.5 - np.sin(t_lower)])
    X = np.vstack([upper, lower])
    y = np.concatenate([np.zeros(n_upper, dtype=np.int64), np.ones(n_lower, dtype=np.int64)])
    gen = _rng.stream(seed)
    perm = gen.permutation(n)
    X = X[perm] + gen.normal(scale=noise, size=X.shape) if noise > 0 else X[perm]
    return Dataset(X, y[perm], ("x0", "x1"))


MOON_CENTERS = {0: np.array([0.0, 0.0]), 1: np.array([1.0, 0.5])}


def _parse_float(cell: str) -> float | None:
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    if not os.path.isfile(path):
        raise MissingFileError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row required") from None
        rows = [r for r in reader if r]
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise ParseError(f"{path}: row {i + 2} has {len(r)} fields, header has {len(header)}")
    return [h.strip() for h in header], rows


def _target_mapping(values: Sequence[str]) -> dict[str, int]:
    distinct = sorted(set(values))
    if len(distinct) > 2:
        raise MulticlassUnsupportedError(
            f"target has {len(distinct)} distinct values; only binary classification is supported"
        )
    numeric = [_parse_float(v) for v in distinct]
    if all(v is not None for v in numeric):
        distinct = [d for _, d in sorted(zip(numeric, distinct))]
    return {v: i for i, v in enumerate(distinct)}


def load_csv(path, target_column: str, drop_non_numeric: bool = False) -> Dataset:
    """Read a headed CSV; numeric columns become features, ``target_column`` the label.

    The smaller target value maps to 0 (numeric order when both values are
    numbers, string order otherwise).
    """
    header, rows = _read_rows(path)
    if target_column not in header:
        raise ParseError(f"{path}: target column {target_column!r} not in header")
    if not rows:
        raise ParseError(f"{path}: no data rows")
    t = header.index(target_column)
    mapping = _target_mapping([r[t].strip() for r in rows])
    y = np.array([mapping[r[t].strip()] for r in rows], dtype=np.int64)

    names, columns = [], []
    for j, name in enumerate(header):
        if j == t:
            continue
        parsed = [_parse_float(r[j]) for r in rows]
        bad = [i for i, v in enumerate(parsed) if v is None]
        if bad:
            if drop_non_numeric:
                continue
            if len(bad) == len(rows):
                raise NonNumericColumnError(f"{path}: column {name!r} is not numeric")
            raise ParseError(f"{path}: unparseable numeric cell {rows[bad[0]][j]!r} in column {name!r}, row {bad[0] + 2}")
        names.append(name)
        columns.append(parsed)
    if not columns:
        raise NoFeaturesError(f"{path}: no numeric feature columns remain")
    return Dataset(np.array(columns, dtype=np.float64).T, y, tuple(names))


def save_csv(data: Dataset, path) -> None:
    """Write features plus a trailing ``label`` column; floats use shortest round-trip repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*data.feature_names, LABEL_COLUMN])
        for row, label in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])


def numeric_columns_only(src, dst, target_column: str) -> list[str]:
    """Preprocessing rule for raw tables: keep numeric attributes, rename the target to ``label``.

    Returns the names of the dropped columns.
    """
    data = load_csv(src, target_column, drop_non_numeric=True)
    header, _ = _read_rows(src)
    dropped = [h for h in header if h != target_column and h not in data.feature_names]
    save_csv(data, dst)
    return dropped


def train_test_split(data: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    if not 0.0 < test_fraction < 1.0:
        raise InvalidArgumentError("test_fraction must lie in (0, 1)")
    n_test = math.floor(data.n * test_fraction + 1e-9)
    n_train = data.n - n_test
    if n_test < 1 or n_train < 1:
        raise InvalidArgumentError(f"split of {data.n} rows at fraction {test_fraction} leaves an empty part")
    perm = _rng.stream(seed, _rng.SPLIT).permutation(data.n)
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))


def feature_stats(data: Dataset) -> FeatureStats:
    """Per-feature mean and population standard deviation (divisor n)."""
    if data.n < 2:
        raise InvalidArgumentError("feature statistics need at least 2 rows")
    return FeatureStats(_frozen(data.X.mean(axis=0)), _frozen(data.X.std(axis=0, ddof=0)))


def max_distance(data: Dataset, x) -> float:
    x = as_vector(x, data.dimension)
    return float(np.sqrt(np.max(np.sum((data.X - x) ** 2, axis=1))))


def relative_radius(data: Dataset, x, fraction: float) -> float:
    """``fraction`` times the largest l2 distance from ``x`` to a dataset row."""
    if not 0.0 < fraction <= 1.0:
        raise InvalidArgumentError("fraction must lie in (0, 1]")
    return fraction * max_distance(data, x)
