"""Local Fidelity: how well a surrogate ranks the black box's labels inside a
ball around the explained instance, plus radius sweeps and dataset averages."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import rankdata

from . import rng as _rng
from .blackbox import BlackBoxModel
from .data import Dataset, as_vector, feature_stats, max_distance, relative_radius
from .errors import InvalidArgumentError, NumericalError, UndefinedAUCError
from .sampling import _ball
from .surrogate import Explanation, ExplainerConfig, explain

METRICS = ("auc", "accuracy")


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(random positive outranks random negative), ties count 1/2."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise InvalidArgumentError("scores and labels must be 1-D and equally long")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("AUC needs both classes among the labels")
    ranks = rankdata(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class FidelityConfig:
    r_fid_fraction: float = 0.05
    n_eval: int = 1000
    seed: int = 0
    metric: str = "auc"

    def __post_init__(self):
        if not 0 < self.r_fid_fraction <= 1:
            raise InvalidArgumentError("r_fid fraction must lie in (0, 1]")
        if self.n_eval < 2:
            raise InvalidArgumentError("n_eval must be >= 2")
        if self.metric not in METRICS:
            raise InvalidArgumentError(f"unknown metric {self.metric!r}")


def local_fidelity(model: BlackBoxModel, s, x, r_fid_abs: float, cfg: FidelityConfig) -> float | None:
    """Agreement of surrogate ``s`` with ``model`` over ``cfg.n_eval`` uniform draws in B(x, r_fid_abs).

    With the AUC metric the black-box labels are the ground truth and the
    surrogate's raw score is the ranking. Returns ``None`` when the black box
    is single-class over the draws.
    """
    x = as_vector(x, model.dimension)
    if not r_fid_abs > 0:
        raise InvalidArgumentError("fidelity radius must be positive")
    pts = _ball(x, float(r_fid_abs), cfg.n_eval, _rng.stream(cfg.seed, _rng.EVALUATE))
    truth = model.label_batch(pts)
    if truth.min() == truth.max():
        return None
    pred = s.score_batch(pts)
    if cfg.metric == "accuracy":
        return float(np.mean((pred >= 0.5).astype(np.int64) == truth))
    return auc(pred, truth)


def sweep_config(cfg: FidelityConfig, position: int, fraction: float) -> FidelityConfig:
    return replace(cfg, r_fid_fraction=fraction, seed=_rng.derive_seed(cfg.seed, _rng.EVALUATE, position))


def radius_sweep(model, s, x, data: Dataset, fractions, cfg: FidelityConfig) -> list[tuple[float, float | None]]:
    fractions = [float(f) for f in fractions]
    if not fractions or any(not 0 < f <= 1 for f in fractions):
        raise InvalidArgumentError("sweep fractions must lie in (0, 1]")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise InvalidArgumentError("sweep fractions must be strictly increasing")
    out = []
    for k, f in enumerate(fractions):
        out.append((f, local_fidelity(model, s, x, relative_radius(data, x, f), sweep_config(cfg, k, f))))
    return out


@dataclass(frozen=True)
class InstanceScore:
    index: int
    score: float | None
    reason: str | None = None


@dataclass(frozen=True)
class FidelityReport:
    method: str
    r_fid_fraction: float
    n_eval: int
    per_instance: tuple[InstanceScore, ...]

    @property
    def scores(self) -> np.ndarray:
        return np.array([p.score for p in self.per_instance if p.score is not None], dtype=np.float64)

    @property
    def n_skipped(self) -> int:
        return sum(p.score is None for p in self.per_instance)

    @property
    def mean(self) -> float:
        s = self.scores
        return float(s.mean()) if s.size else math.nan

    @property
    def std_dev(self) -> float:
        """Population standard deviation over evaluated instances."""
        s = self.scores
        return float(s.std(ddof=0)) if s.size else math.nan

    def to_dict(self) -> dict:
        def num(v):
            return None if math.isnan(v) else v

        rows = []
        for p in self.per_instance:
            row = {"index": p.index, "score": "skip" if p.score is None else p.score}
            if p.reason is not None:
                row["reason"] = p.reason
            rows.append(row)
        return {
            "method": self.method,
            "r_fid_fraction": self.r_fid_fraction,
            "n_eval": self.n_eval,
            "mean": num(self.mean),
            "std": num(self.std_dev),
            "n_skipped": self.n_skipped,
            "per_instance": rows,
        }


def instance_config(cfg: ExplainerConfig, index: int) -> ExplainerConfig:
    return replace(cfg, seed=_rng.derive_seed(cfg.seed, _rng.EXPLAIN, index))


def explain_set(model: BlackBoxModel, explainer_cfg: ExplainerConfig, eval_set: Dataset, train: Dataset,
                indices=None) -> list[Explanation | str]:
    """One explanation per eval row; failures become their error message.

    ``indices`` are the stable identifiers used to derive per-instance seeds
    (defaults to row positions).
    """
    indices = range(eval_set.n) if indices is None else indices
    stats = feature_stats(train)
    out = []
    for row, idx in zip(eval_set.X, indices):
        try:
            out.append(explain(model, row, instance_config(explainer_cfg, int(idx)), stats, max_distance(train, row)))
        except NumericalError as exc:
            out.append(f"{type(exc).__name__}: {exc}")
    return out


def score_explanations(model: BlackBoxModel, explanations, eval_set: Dataset, train: Dataset,
                       fid_cfg: FidelityConfig, method: str, indices=None) -> FidelityReport:
    indices = range(eval_set.n) if indices is None else indices
    per = []
    for row, idx, e in zip(eval_set.X, indices, explanations):
        idx = int(idx)
        if isinstance(e, str):
            per.append(InstanceScore(idx, None, e))
            continue
        cfg_i = replace(fid_cfg, seed=_rng.derive_seed(fid_cfg.seed, _rng.EVALUATE, idx))
        score = local_fidelity(model, e.surrogate, row, relative_radius(train, row, fid_cfg.r_fid_fraction), cfg_i)
        per.append(InstanceScore(idx, score, None if score is not None else "single-class neighborhood"))
    return FidelityReport(method, fid_cfg.r_fid_fraction, fid_cfg.n_eval, tuple(per))


def dataset_fidelity(model: BlackBoxModel, explainer_cfg: ExplainerConfig, eval_set: Dataset, train: Dataset,
                     fid_cfg: FidelityConfig, indices=None) -> FidelityReport:
    """Explain every eval instance and average its Local Fidelity.

    Instances whose explainer fails (no boundary found, one-class sample) or
    whose neighbourhood is single-class are kept as skips.
    """
    if eval_set.n < 1:
        raise InvalidArgumentError("eval set is empty")
    exps = explain_set(model, explainer_cfg, eval_set, train, indices)
    return score_explanations(model, exps, eval_set, train, fid_cfg, explainer_cfg.method, indices)


def write_heatmap(report: FidelityReport, eval_set: Dataset, path) -> None:
    """Plot-ready CSV: instance coordinates and score (empty when skipped)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", *eval_set.feature_names, "score"])
        for row, p in zip(eval_set.X, report.per_instance):
            w.writerow([p.index, *(repr(float(v)) for v in row), "" if p.score is None else repr(p.score)])

