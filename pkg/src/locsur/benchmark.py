"""Comparative Local Fidelity benchmark: LIME, LIME-K and LS across datasets."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import rng as _rng
from .blackbox import RandomForestParams, train_random_forest
from .data import Dataset, generate_half_moons, load_csv, train_test_split
from .errors import LocsurError
from .fidelity import FidelityConfig, auc, explain_set, score_explanations
from .surrogate import ExplainerConfig

log = logging.getLogger(__name__)

HALF_MOONS = "half-moons"
METHODS = ("lime", "lime_k", "ls")
DEFAULT_WIDTH_GRID = (0.1, 0.25, 0.5, 1.0, 2.0)
HALF_MOONS_LIME_K_WIDTH = 0.5

# reference mean (std) Local Fidelity per dataset and method
REFERENCE_SCORES = {
    "half-moons": {"lime": (0.89, 0.07), "lime_k": (0.96, 0.06), "ls": (0.97, 0.03)},
    "cancer": {"lime": (0.86, 0.07), "lime_k": (0.87, 0.07), "ls": (0.96, 0.02)},
    "credit": {"lime": (0.67, 0.21), "lime_k": (0.70, 0.18), "ls": (0.85, 0.12)},
    "news": {"lime": (0.64, 0.10), "lime_k": (0.67, 0.10), "ls": (0.79, 0.07)},
    "tennis": {"lime": (0.85, 0.12), "lime_k": (0.83, 0.13), "ls": (0.98, 0.02)},
}


@dataclass(frozen=True)
class DatasetSource:
    """``half-moons`` (generated) or a CSV path with its target column."""

    name: str
    path: str | None = None
    target: str = "label"
    lime_k_width: float | None = None

    @classmethod
    def parse(cls, text: str) -> "DatasetSource":
        """``half-moons`` or ``NAME=PATH[:TARGET]``."""
        if text == HALF_MOONS:
            return cls(HALF_MOONS)
        name, sep, rest = text.partition("=")
        if not sep or not name or not rest:
            raise ValueError(f"dataset must be {HALF_MOONS!r} or NAME=PATH[:TARGET], got {text!r}")
        path, _, target = rest.partition(":")
        return cls(name, path, target or "label")


@dataclass(frozen=True)
class BenchmarkConfig:
    r_fid: tuple[float, ...] = (0.05, 0.2)
    r_sx: float = 0.3
    n_samples: int = 5000
    n_eval: int = 1000
    max_eval_instances: int = 200
    test_fraction: float = 0.2
    n_trees: int = 200
    seed: int = 0
    moons_n: int = 1000
    moons_noise: float = 0.3
    width_grid: tuple[float, ...] = DEFAULT_WIDTH_GRID
    tuning_instances: int = 30
    gs_n_per_step: int = 1000
    gs_step: float = 0.01
    gs_max_radius: float = 2.0


@dataclass
class DatasetResult:
    name: str
    rows: list = field(default_factory=list)
    info: dict = field(default_factory=dict)
    error: str | None = None


def _load(src: DatasetSource, cfg: BenchmarkConfig) -> Dataset:
    if src.name == HALF_MOONS and src.path is None:
        return generate_half_moons(cfg.moons_n, cfg.moons_noise, cfg.seed)
    return load_csv(src.path, src.target)


def select_eval_indices(n: int, cap: int, seed: int) -> np.ndarray:
    if cap <= 0 or n <= cap:
        return np.arange(n)
    return np.sort(_rng.stream(seed, _rng.SELECT).choice(n, size=cap, replace=False))


def tune_lime_k_width(model, train: Dataset, cfg: BenchmarkConfig, base: ExplainerConfig) -> tuple[float, dict]:
    """Pick the width with the best mean Local Fidelity on a seed-pinned slice of training rows.

    Candidates are ``cfg.width_grid`` multiples of ``sqrt(d)``; ties go to the
    narrower width.
    """
    idx = select_eval_indices(train.n, cfg.tuning_instances, _rng.derive_seed(cfg.seed, _rng.TUNE))
    slice_ = train.subset(idx)
    fid = FidelityConfig(cfg.r_fid[0], cfg.n_eval, _rng.derive_seed(cfg.seed, _rng.TUNE, 1))
    scores = {}
    best, best_score = None, -math.inf
    for m in cfg.width_grid:
        width = m * math.sqrt(train.dimension)
        exps = explain_set(model, replace(base, kernel_width=width), slice_, train, idx)
        mean = score_explanations(model, exps, slice_, train, fid, "lime_k", idx).mean
        scores[repr(width)] = None if math.isnan(mean) else mean
        if not math.isnan(mean) and mean > best_score:
            best, best_score = width, mean
    if best is None:
        best = HALF_MOONS_LIME_K_WIDTH * math.sqrt(train.dimension)
    return best, scores


def reference_comparison(name: str, rows: list[dict]) -> dict | None:
    ref = REFERENCE_SCORES.get(name)
    if ref is None:
        return None
    out = {}
    for r_fid in sorted({r["r_fid"] for r in rows}):
        diffs = {}
        for r in rows:
            if r["r_fid"] != r_fid or r["mean"] is None:
                continue
            diffs[r["method"]] = {
                "reference_mean": ref[r["method"]][0],
                "reference_std": ref[r["method"]][1],
                "abs_diff_mean": abs(r["mean"] - ref[r["method"]][0]),
            }
        out[repr(r_fid)] = {
            "methods": diffs,
            "max_abs_diff": max((v["abs_diff_mean"] for v in diffs.values()), default=None),
        }
    return out


def run_dataset(src: DatasetSource, cfg: BenchmarkConfig) -> DatasetResult:
    res = DatasetResult(src.name)
    data = _load(src, cfg)
    train, test = train_test_split(data, cfg.test_fraction, cfg.seed)
    model = train_random_forest(train, RandomForestParams(cfg.n_trees, seed=cfg.seed))
    res.info.update(
        n_rows=data.n, dimension=data.dimension, n_train=train.n, n_test=test.n,
        black_box_test_auc=auc(model.score_batch(test.X), test.y) if test.has_both_classes() else None,
    )
    eval_idx = select_eval_indices(test.n, cfg.max_eval_instances, cfg.seed)
    eval_set = test.subset(eval_idx)
    res.info["n_eval_instances"] = int(eval_set.n)

    common = dict(n_samples=cfg.n_samples, seed=cfg.seed, gs_n_per_step=cfg.gs_n_per_step,
                  gs_step=cfg.gs_step, gs_max_radius=cfg.gs_max_radius)
    lime_k = ExplainerConfig("lime_k", **common)
    if src.lime_k_width is not None:
        width, tuning = src.lime_k_width, None
    elif src.name == HALF_MOONS:
        width, tuning = HALF_MOONS_LIME_K_WIDTH, None
    else:
        width, tuning = tune_lime_k_width(model, train, cfg, lime_k)
    res.info["lime_k_width"] = width
    res.info["lime_k_tuning"] = tuning

    configs = {
        "lime": ExplainerConfig("lime", **common),
        "lime_k": replace(lime_k, kernel_width=width),
        "ls": ExplainerConfig("ls", surrogate_radius=cfg.r_sx, **common),
    }
    for method, ecfg in configs.items():
        log.info("%s: explaining %d instances with %s", src.name, eval_set.n, method)
        exps = explain_set(model, ecfg, eval_set, train, eval_idx)
        for r_fid in cfg.r_fid:
            fid = FidelityConfig(r_fid, cfg.n_eval, cfg.seed)
            rep = score_explanations(model, exps, eval_set, train, fid, method, eval_idx)
            d = rep.to_dict()
            res.rows.append({
                "dataset": src.name, "method": method, "r_fid": r_fid,
                "mean": d["mean"], "std": d["std"],
                "n_instances": eval_set.n, "n_skipped": d["n_skipped"],
                "per_instance": d["per_instance"],
            })
    res.info["reference"] = reference_comparison(src.name, res.rows)
    return res


def run_benchmark(sources: list[DatasetSource], cfg: BenchmarkConfig) -> list[DatasetResult]:
    results = []
    for src in sources:
        try:
            results.append(run_dataset(src, cfg))
        except LocsurError as exc:
            log.warning("dataset %s failed: %s", src.name, exc)
            results.append(DatasetResult(src.name, error=f"{type(exc).__name__}: {exc}"))
    return results


CSV_COLUMNS = ("dataset", "method", "r_fid", "mean", "std", "n_instances", "n_skipped")


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_results(results: list[DatasetResult], cfg: BenchmarkConfig, csv_path, json_path) -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for res in results:
            for row in res.rows:
                w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    payload = {
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()},
        "datasets": [
            {"name": r.name, "error": r.error, **r.info, "results": r.rows} for r in results
        ],
    }
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def table(results: list[DatasetResult], r_fid: float) -> str:
    """Plain-text ``mean (std)`` grid for one radius."""
    lines = [f"r_fid={r_fid:g}", f"{'dataset':<12} {'LIME':>14} {'LIME-K':>14} {'LS':>14}"]
    for res in results:
        if res.error:
            lines.append(f"{res.name:<12} failed: {res.error}")
            continue
        cells = []
        for m in METHODS:
            row = next((r for r in res.rows if r["method"] == m and r["r_fid"] == r_fid), None)
            if row is None or row["mean"] is None:
                cells.append(f"{'n/a':>14}")
            else:
                cells.append(f"{row['mean']:.2f} ({row['std']:.2f})".rjust(14))
        lines.append(f"{res.name:<12} " + " ".join(cells))
    return "\n".join(lines)
