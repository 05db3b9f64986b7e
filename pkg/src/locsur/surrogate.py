"""Linear surrogates and the three explainers built on them.

``lime`` and ``lime_k`` draw from a global normal fitted to the training
features and weight the draws with an RBF kernel around the query; they differ
only in kernel width. ``ls`` first locates the nearest boundary crossing and
draws uniformly in a ball around it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import rng as _rng
from .blackbox import BlackBoxModel
from .data import FeatureStats, as_vector
from .errors import IllConditionedError, InvalidArgumentError, OneClassSampleError
from .sampling import (
    BoundaryPoint,
    GrowingSpheresConfig,
    find_boundary_point,
    rbf_weights,
    sample_ball_uniform,
    sample_global_normal,
)

METHODS = ("lime", "lime_k", "ls")
DEFAULT_LAMBDA = {"lime": 1.0, "lime_k": 1.0, "ls": 1e-3}


@dataclass(frozen=True)
class LinearSurrogate:
    intercept: float
    coefficients: np.ndarray
    ridge_lambda: float = 0.0

    @property
    def dimension(self) -> int:
        return self.coefficients.size

    def score_batch(self, xs) -> np.ndarray:
        X = np.asarray(xs, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dimension:
            raise InvalidArgumentError(f"expected points of dimension {self.dimension}, got shape {X.shape}")
        return self.intercept + X @ self.coefficients

    def score(self, a) -> float:
        return self.intercept + float(np.dot(as_vector(a, self.dimension), self.coefficients))


def surrogate_label(s: LinearSurrogate, a) -> int:
    """1 when the surrogate score reaches 0.5 (ties go to class 1)."""
    return int(s.score(a) >= 0.5)


def fit_weighted_ridge(X, y, weights, lam: float) -> LinearSurrogate:
    """Minimize ``sum w_i (y_i - b - <c, x_i>)^2 + lam * |c|^2`` with ``b`` unpenalized.

    Centering on the weighted means removes the intercept from the system,
    leaving ``(Xc^T W Xc + lam I) c = Xc^T W yc``, solved by Cholesky.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidArgumentError("X must be a 2-D array")
    n, d = X.shape
    if y.shape != (n,) or w.shape != (n,):
        raise InvalidArgumentError("X, y and weights must have equal lengths")
    if n < d + 1:
        raise InvalidArgumentError(f"need at least d+1={d + 1} samples, got {n}")
    if lam < 0:
        raise InvalidArgumentError("ridge lambda must be nonnegative")
    if np.any(w < 0) or not np.any(w > 0):
        raise InvalidArgumentError("weights must be nonnegative with at least one positive")
    wsum = w.sum()
    x_mean = w @ X / wsum
    y_mean = w @ y / wsum
    Xc = X - x_mean
    A = Xc.T @ (Xc * w[:, None]) + lam * np.eye(d)
    rhs = Xc.T @ (w * (y - y_mean))
    if lam == 0:
        ev = np.linalg.eigvalsh(A)
        if ev[0] <= ev[-1] * 1e-12:
            raise IllConditionedError("singular weighted normal equations; use ridge lambda > 0")
    try:
        coef = scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), rhs)
    except np.linalg.LinAlgError:
        raise IllConditionedError("weighted normal equations not positive definite; use ridge lambda > 0") from None
    return LinearSurrogate(float(y_mean - x_mean @ coef), coef, float(lam))


@dataclass(frozen=True)
class ExplainerConfig:
    method: str = "lime"
    n_samples: int = 5000
    kernel_width: float | None = None
    surrogate_radius: float = 0.3
    ridge_lambda: float | None = None
    seed: int = 0
    gs_n_per_step: int = 1000
    gs_step: float = 0.01
    gs_max_radius: float = 2.0
    standardize: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgumentError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.n_samples < 2:
            raise InvalidArgumentError("n_samples must be >= 2")
        if self.kernel_width is not None and not self.kernel_width > 0:
            raise InvalidArgumentError("kernel width must be positive")
        if self.method == "ls" and not 0 < self.surrogate_radius <= 1:
            raise InvalidArgumentError("surrogate radius r_sx must lie in (0, 1]")
        if self.ridge_lambda is not None and self.ridge_lambda < 0:
            raise InvalidArgumentError("ridge lambda must be nonnegative")

    @property
    def lam(self) -> float:
        return DEFAULT_LAMBDA[self.method] if self.ridge_lambda is None else self.ridge_lambda

    def width(self, dimension: int) -> float:
        return self.kernel_width if self.kernel_width is not None else default_kernel_width(dimension)


def default_kernel_width(dimension: int) -> float:
    return 0.75 * math.sqrt(dimension)


@dataclass(frozen=True)
class Explanation:
    query: np.ndarray
    surrogate: LinearSurrogate
    method: str
    n_samples_used: int
    seed: int
    boundary: BoundaryPoint | None = None
    kernel_width: float | None = None
    surrogate_radius: float | None = None

    def __post_init__(self):
        if (self.boundary is not None) != (self.method == "ls"):
            raise AssertionError("boundary point present iff method is ls")

    def to_dict(self) -> dict:
        b = self.boundary
        return {
            "method": self.method,
            "query": [float(v) for v in self.query],
            "intercept": float(self.surrogate.intercept),
            "coefficients": [float(v) for v in self.surrogate.coefficients],
            "boundary_point": None if b is None else [float(v) for v in b.point],
            "boundary_distance": None if b is None else b.distance_to_query,
            "seed": self.seed,
            "n_samples": self.n_samples_used,
            "kernel_width": self.kernel_width,
            "surrogate_radius": self.surrogate_radius,
            "ridge_lambda": self.surrogate.ridge_lambda,
        }


def explain_lime(model: BlackBoxModel, x, stats: FeatureStats, cfg: ExplainerConfig) -> Explanation:
    """Global-normal sample, black-box probabilities as targets, RBF weights around ``x``.

    With ``cfg.standardize`` (the default) the kernel distance and the ridge
    fit use features divided by their training standard deviation, so the
    kernel width is in standard-deviation units; the returned surrogate is
    mapped back to raw feature units either way.
    """
    if cfg.method not in ("lime", "lime_k"):
        raise InvalidArgumentError("explain_lime handles methods lime and lime_k")
    x = as_vector(x, model.dimension)
    if stats.dimension != model.dimension:
        raise InvalidArgumentError("feature statistics do not match the model dimension")
    X = sample_global_normal(stats, cfg.n_samples, _rng.derive_seed(cfg.seed, _rng.SURROGATE_SAMPLE))
    y = model.score_batch(X)
    width = cfg.width(model.dimension)
    if cfg.standardize:
        # kernel distances and the fit live in z-scored units; constant features keep unit scale
        scale = np.where(stats.std_devs > 0, stats.std_devs, 1.0)
        Z, z = (X - stats.means) / scale, (x - stats.means) / scale
        fit = fit_weighted_ridge(Z, y, rbf_weights(Z, z, width), cfg.lam)
        coef = fit.coefficients / scale
        s = LinearSurrogate(fit.intercept - float(coef @ stats.means), coef, fit.ridge_lambda)
    else:
        s = fit_weighted_ridge(X, y, rbf_weights(X, x, width), cfg.lam)
    return Explanation(x, s, cfg.method, cfg.n_samples, cfg.seed, kernel_width=width)


def explain_ls(model: BlackBoxModel, x, data_scale: float, cfg: ExplainerConfig) -> Explanation:
    """Boundary-centred surrogate.

    ``data_scale`` is the query's maximum distance to the training rows; both
    the search radii and the sampling radius ``cfg.surrogate_radius`` are
    fractions of it.
    """
    if cfg.method != "ls":
        raise InvalidArgumentError("explain_ls handles method ls only")
    x = as_vector(x, model.dimension)
    gs = GrowingSpheresConfig.scaled(
        data_scale, cfg.gs_n_per_step, cfg.gs_step, cfg.gs_max_radius,
        seed=_rng.derive_seed(cfg.seed, _rng.BOUNDARY),
    )
    border = find_boundary_point(model, x, gs)
    radius = cfg.surrogate_radius * data_scale
    X = sample_ball_uniform(border.point, radius, cfg.n_samples, _rng.derive_seed(cfg.seed, _rng.SURROGATE_SAMPLE))
    y = model.label_batch(X)
    if y.min() == y.max():
        raise OneClassSampleError(
            f"all {cfg.n_samples} surrogate samples share label {int(y[0])}; r_sx too small for this boundary"
        )
    s = fit_weighted_ridge(X, y, np.ones(len(y)), cfg.lam)
    return Explanation(x, s, "ls", cfg.n_samples, cfg.seed, boundary=border, surrogate_radius=radius)


def explain(model: BlackBoxModel, x, cfg: ExplainerConfig, stats: FeatureStats, data_scale: float) -> Explanation:
    if cfg.method == "ls":
        return explain_ls(model, x, data_scale, cfg)
    return explain_lime(model, x, stats, cfg)
