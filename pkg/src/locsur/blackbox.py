"""Black-box classifiers: a bagged Gini forest and closed-form oracle models.

Every model exposes ``score_batch`` (probability of class 1) and derives
labels from it with the rule ``label = score >= 0.5``.
"""
from __future__ import annotations

import io
import json
import math
import zipfile
from dataclasses import asdict, dataclass

import numba
import numpy as np

from . import rng as _rng
from .data import Dataset, as_vector
from .errors import InvalidArgumentError, MissingFileError, ModelFormatError, SingleClassError

MODEL_FORMAT = "locsur-forest"
MODEL_FORMAT_VERSION = 1


class BlackBoxModel:
    """Opaque probability scorer over a fixed input dimension."""

    dimension: int

    def _scores(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def score_batch(self, xs) -> np.ndarray:
        X = np.asarray(xs, dtype=np.float64)
        if X.ndim == 1 and X.size == 0:
            return np.empty(0)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise InvalidArgumentError(f"expected points of dimension {self.dimension}, got shape {X.shape}")
        return self._scores(X)

    def score(self, x) -> float:
        return float(self.score_batch(as_vector(x, self.dimension)[None, :])[0])

    def label_batch(self, xs) -> np.ndarray:
        return (self.score_batch(xs) >= 0.5).astype(np.int64)

    def label(self, x) -> int:
        return int(self.score(x) >= 0.5)


def score_batch(model: BlackBoxModel, xs) -> np.ndarray:
    return model.score_batch(xs)


# ---------------------------------------------------------------- oracles


class HalfspaceOracle(BlackBoxModel):
    """Class 1 where ``<w, x> + b0 >= 0``."""

    def __init__(self, w, b0: float = 0.0):
        self.w = as_vector(w)
        if not np.any(self.w):
            raise InvalidArgumentError("halfspace normal must be nonzero")
        self.b0 = float(b0)
        self.dimension = self.w.size

    def region(self, X):
        return X @ self.w + self.b0 >= 0

    def _scores(self, X):
        return self.region(X).astype(np.float64)

    def distance(self, x) -> float:
        """Exact l2 distance from ``x`` to the separating hyperplane."""
        return abs(float(np.dot(self.w, x)) + self.b0) / float(np.linalg.norm(self.w))


class BallOracle(BlackBoxModel):
    """Class 1 inside the closed ball."""

    def __init__(self, center, radius: float):
        self.center = as_vector(center)
        if not radius > 0:
            raise InvalidArgumentError("ball radius must be positive")
        self.radius = float(radius)
        self.dimension = self.center.size

    def region(self, X):
        return np.linalg.norm(X - self.center, axis=1) <= self.radius

    def _scores(self, X):
        return self.region(X).astype(np.float64)


class CheckerboardOracle(BlackBoxModel):
    """Class 1 on cells whose integer coordinates sum to an even number."""

    def __init__(self, cell: float, dimension: int = 2):
        if not cell > 0:
            raise InvalidArgumentError("checkerboard cell size must be positive")
        if dimension < 1:
            raise InvalidArgumentError("dimension must be >= 1")
        self.cell = float(cell)
        self.dimension = int(dimension)

    def region(self, X):
        return np.floor(X / self.cell).astype(np.int64).sum(axis=1) % 2 == 0

    def _scores(self, X):
        return self.region(X).astype(np.float64)


def make_oracle(kind: str, **params) -> BlackBoxModel:
    """Build an analytic classifier: ``halfspace(w, b0)``, ``ball(center, radius)`` or ``checkerboard(cell)``."""
    builders = {"halfspace": HalfspaceOracle, "ball": BallOracle, "checkerboard": CheckerboardOracle}
    if kind not in builders:
        raise InvalidArgumentError(f"unknown oracle kind {kind!r}")
    try:
        return builders[kind](**params)
    except TypeError as exc:
        raise InvalidArgumentError(str(exc)) from None


# ---------------------------------------------------------------- forest


@dataclass(frozen=True)
class RandomForestParams:
    n_trees: int = 200
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: str | int | float = "sqrt"
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidArgumentError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise InvalidArgumentError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise InvalidArgumentError("min_samples_leaf must be >= 1")


@numba.njit(cache=True, nogil=True)
def _count_votes(X, roots, feature, threshold, left, right, vote):
    n = X.shape[0]
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        total = 0
        for t in range(roots.shape[0]):
            node = roots[t]
            while left[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            total += vote[node]
        out[i] = total
    return out


class RandomForest(BlackBoxModel):
    """Flattened tree ensemble; the score is the fraction of trees voting class 1.

    All trees share one set of node arrays. ``left[k] == -1`` marks a leaf and
    ``vote[k]`` is its class. Inputs are rounded to float32 before comparison
    with the thresholds, which is how the trees were grown.
    """

    def __init__(self, dimension, roots, feature, threshold, left, right, vote, params=None, metadata=None):
        self.dimension = int(dimension)
        self.metadata = dict(metadata or {})
        self.roots = np.ascontiguousarray(roots, dtype=np.int64)
        self.feature = np.ascontiguousarray(feature, dtype=np.int64)
        self.threshold = np.ascontiguousarray(threshold, dtype=np.float64)
        self.left = np.ascontiguousarray(left, dtype=np.int64)
        self.right = np.ascontiguousarray(right, dtype=np.int64)
        self.vote = np.ascontiguousarray(vote, dtype=np.int64)
        self.params = params
        for a in (self.roots, self.feature, self.threshold, self.left, self.right, self.vote):
            a.flags.writeable = False

    @property
    def n_trees(self) -> int:
        return self.roots.size

    def vote_counts(self, X: np.ndarray) -> np.ndarray:
        X32 = np.ascontiguousarray(X, dtype=np.float32).astype(np.float64)
        return _count_votes(X32, self.roots, self.feature, self.threshold, self.left, self.right, self.vote)

    def _scores(self, X):
        return self.vote_counts(X) / self.n_trees

    def to_bytes(self) -> bytes:
        header = {
            "format": MODEL_FORMAT,
            "version": MODEL_FORMAT_VERSION,
            "dimension": self.dimension,
            "n_trees": self.n_trees,
            "params": asdict(self.params) if self.params is not None else None,
            "metadata": self.metadata,
        }
        arrays = {
            "header": np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8),
            "roots": self.roots, "feature": self.feature, "threshold": self.threshold,
            "left": self.left, "right": self.right, "vote": self.vote,
        }
        buf = io.BytesIO()
        # npz layout with pinned entry timestamps so identical forests give identical bytes
        with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED) as zf:
            for name, arr in arrays.items():
                member = io.BytesIO()
                np.lib.format.write_array(member, np.ascontiguousarray(arr), allow_pickle=False)
                info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
                info.compress_type = zipfile.ZIP_DEFLATED
                zf.writestr(info, member.getvalue())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "RandomForest":
        try:
            z = np.load(io.BytesIO(raw), allow_pickle=False)
            header = json.loads(bytes(z["header"]).decode("utf-8"))
            arrays = {k: z[k] for k in ("roots", "feature", "threshold", "left", "right", "vote")}
        except (ValueError, KeyError, OSError) as exc:
            raise ModelFormatError(f"not a forest model file: {exc}") from None
        if header.get("format") != MODEL_FORMAT:
            raise ModelFormatError(f"unexpected model format {header.get('format')!r}")
        if header.get("version") != MODEL_FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model format version {header.get('version')}")
        params = RandomForestParams(**header["params"]) if header.get("params") else None
        return cls(header["dimension"], params=params, metadata=header.get("metadata"), **arrays)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "RandomForest":
        try:
            with open(path, "rb") as fh:
                return cls.from_bytes(fh.read())
        except FileNotFoundError:
            raise MissingFileError(f"no such model file: {path}") from None


def _max_features(rule, d: int):
    if rule == "sqrt":
        return max(1, int(math.sqrt(d)))
    if rule == "all":
        return None
    return rule


def train_random_forest(train: Dataset, params: RandomForestParams = RandomForestParams()) -> RandomForest:
    """Grow a bagged forest of Gini trees and flatten it.

    Tree induction is delegated to scikit-learn's CART builder (bootstrap
    resampling, random feature subset per split); the resulting structure is
    copied into a :class:`RandomForest`, which owns scoring and persistence.
    """
    from sklearn.ensemble import RandomForestClassifier

    if not train.has_both_classes():
        raise SingleClassError("training set must contain both classes")
    rf = RandomForestClassifier(
        n_estimators=params.n_trees,
        criterion="gini",
        max_depth=params.max_depth,
        min_samples_leaf=params.min_samples_leaf,
        max_features=_max_features(params.features_per_split, train.dimension),
        bootstrap=True,
        random_state=_rng.derive_seed(params.seed, _rng.FOREST),
        n_jobs=1,
    )
    rf.fit(train.X, train.y)
    roots, feature, threshold, left, right, vote = [], [], [], [], [], []
    offset = 0
    for est in rf.estimators_:
        tree = est.tree_
        is_leaf = tree.children_left < 0
        roots.append(offset)
        feature.append(np.where(is_leaf, 0, tree.feature))
        threshold.append(np.where(is_leaf, 0.0, tree.threshold))
        left.append(np.where(is_leaf, -1, tree.children_left + offset))
        right.append(np.where(is_leaf, -1, tree.children_right + offset))
        # leaf class = argmax of class weights, ties to the first class (0)
        vote.append(est.classes_[np.argmax(tree.value[:, 0, :], axis=1)])
        offset += tree.node_count
    return RandomForest(
        train.dimension, np.array(roots), np.concatenate(feature), np.concatenate(threshold),
        np.concatenate(left), np.concatenate(right), np.concatenate(vote), params=params,
    )
