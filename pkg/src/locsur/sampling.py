"""Instance generation: global normal draws, uniform ball draws, RBF weights,
and the expanding-ball search for the nearest decision-boundary crossing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .blackbox import BlackBoxModel
from .data import FeatureStats, as_vector
from .errors import BoundaryNotFoundError, InvalidArgumentError


def sample_global_normal(stats: FeatureStats, n: int, seed: int) -> np.ndarray:
    """``n`` independent draws with feature ``j ~ Normal(means[j], std_devs[j])``.

    Zero-variance features come back as their constant mean.
    """
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    z = _rng.stream(seed).standard_normal((n, stats.dimension))
    return stats.means + z * stats.std_devs


def _ball(center: np.ndarray, radius: float, n: int, gen: np.random.Generator) -> np.ndarray:
    d = center.size
    direction = gen.standard_normal((n, d))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    # a zero Gaussian vector has probability zero; guard the division anyway
    norms[norms == 0] = 1.0
    magnitude = radius * gen.random((n, 1)) ** (1.0 / d)
    return center + direction / norms * magnitude


def sample_ball_uniform(center, radius: float, n: int, seed: int) -> np.ndarray:
    """``n`` points uniform in the closed l2 ball, by normalized-Gaussian direction
    and inverse-CDF radius ``radius * U**(1/d)``."""
    center = as_vector(center)
    if n < 1:
        raise InvalidArgumentError("n must be >= 1")
    if not radius > 0:
        raise InvalidArgumentError("radius must be positive")
    return _ball(center, float(radius), n, _rng.stream(seed))


def rbf_weights(samples, x, kernel_width: float) -> np.ndarray:
    if not kernel_width > 0:
        raise InvalidArgumentError("kernel width must be positive")
    X = np.asarray(samples, dtype=np.float64)
    x = as_vector(x)
    if X.ndim != 2 or X.shape[1] != x.size:
        raise InvalidArgumentError(f"samples of shape {X.shape} do not match dimension {x.size}")
    sq = np.sum((X - x) ** 2, axis=1)
    return np.exp(-sq / kernel_width**2)


@dataclass(frozen=True)
class GrowingSpheresConfig:
    n_per_step: int = 1000
    initial_radius: float = 0.01
    radius_growth: float = 0.01
    max_radius: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.n_per_step < 1:
            raise InvalidArgumentError("n_per_step must be >= 1")
        if not (self.initial_radius > 0 and self.radius_growth > 0 and self.max_radius > 0):
            raise InvalidArgumentError("radii must be positive")
        if self.initial_radius > self.max_radius:
            raise InvalidArgumentError("initial_radius exceeds max_radius")

    @classmethod
    def scaled(cls, scale: float, n_per_step: int = 1000, step_fraction: float = 0.01,
               max_fraction: float = 2.0, seed: int = 0) -> "GrowingSpheresConfig":
        """Radii proportional to a data scale (the query's max distance to the data)."""
        if not scale > 0:
            raise InvalidArgumentError("data scale must be positive")
        step = step_fraction * scale
        return cls(n_per_step, step, step, max_fraction * scale, seed)


@dataclass(frozen=True)
class BoundaryPoint:
    point: np.ndarray
    distance_to_query: float
    steps_taken: int
    query_label: int
    point_label: int

    def __post_init__(self):
        if self.query_label == self.point_label:
            raise AssertionError("boundary point carries the query's own label")


def find_boundary_point(model: BlackBoxModel, x, cfg: GrowingSpheresConfig) -> BoundaryPoint:
    """Nearest label flip found by sampling balls of additively growing radius around ``x``.

    Step ``k`` draws ``cfg.n_per_step`` points uniformly in the ball of radius
    ``initial_radius + k * radius_growth`` from its own seed stream. The first
    step that contains a point labelled differently from ``x`` ends the
    search, and the closest such point is returned.
    """
    x = as_vector(x, model.dimension)
    query_label = model.label(x)
    step = 0
    while True:
        radius = cfg.initial_radius + step * cfg.radius_growth
        if radius > cfg.max_radius * (1 + 1e-12):
            raise BoundaryNotFoundError(
                f"no label flip within radius {cfg.max_radius:g} after {step} steps"
            )
        pts = _ball(x, radius, cfg.n_per_step, _rng.stream(cfg.seed, _rng.BOUNDARY, step))
        labels = model.label_batch(pts)
        flipped = pts[labels != query_label]
        step += 1
        if len(flipped):
            dist = np.linalg.norm(flipped - x, axis=1)
            k = int(np.argmin(dist))
            return BoundaryPoint(flipped[k], float(dist[k]), step, query_label, 1 - query_label)
