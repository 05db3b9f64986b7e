import csv
import math

import numpy as np
import pytest

from locsur import rng as _rng
from locsur.blackbox import BallOracle, HalfspaceOracle
from locsur.data import Dataset, relative_radius
from locsur.errors import InvalidArgumentError, UndefinedAUCError
from locsur.fidelity import (
    FidelityConfig,
    auc,
    dataset_fidelity,
    local_fidelity,
    radius_sweep,
    sweep_config,
    write_heatmap,
)
from locsur.surrogate import ExplainerConfig, LinearSurrogate, explain_ls


def pair_count_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return total / (len(pos) * len(neg))


class TestAuc:
    def test_perfect_and_inverted(self):
        assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
        assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0

    def test_all_tied(self):
        assert auc([0.5] * 4, [0, 1, 0, 1]) == 0.5

    def test_small_hand_case(self):
        # positives 0.4, 0.8 against negatives 0.1, 0.4: pairs 1 + 0.5 + 1 + 1
        assert auc([0.1, 0.4, 0.4, 0.8], [0, 0, 1, 1]) == pytest.approx(0.875)

    def test_single_class(self):
        with pytest.raises(UndefinedAUCError):
            auc([0.1, 0.2], [1, 1])

    def test_against_pair_count(self):
        g = np.random.default_rng(3)
        for _ in range(20):
            s = np.round(g.uniform(size=100), 1)  # coarse rounding forces ties
            y = g.integers(0, 2, 100)
            if y.min() == y.max():
                continue
            assert auc(s, y) == pytest.approx(pair_count_auc(s, y), abs=1e-12)

    def test_monotone_invariance(self, rng):
        s, y = rng.normal(size=300), rng.integers(0, 2, 300)
        assert auc(np.exp(3 * s) + 7, y) == pytest.approx(auc(s, y), abs=1e-12)

    def test_complement(self, rng):
        s, y = rng.normal(size=200), rng.integers(0, 2, 200)
        assert auc(-s, y) == pytest.approx(1 - auc(s, y), abs=1e-12)


class TestLocalFidelity:
    model = HalfspaceOracle([1.0, 0.0], 0.0)

    def test_surrogate_equal_to_black_box(self):
        s = LinearSurrogate(0.5, np.array([1.0, 0.0]))
        assert local_fidelity(self.model, s, [0.0, 0.0], 1.0, FidelityConfig()) == 1.0

    def test_anti_surrogate(self):
        s = LinearSurrogate(0.5, np.array([-1.0, 0.0]))
        assert local_fidelity(self.model, s, [0.0, 0.0], 1.0, FidelityConfig()) == 0.0

    def test_black_box_own_score(self, small_forest):
        assert local_fidelity(small_forest, small_forest, [0.5, 0.25], 0.5, FidelityConfig(seed=2)) == 1.0

    def test_single_class_ball_is_skip(self):
        s = LinearSurrogate(0.5, np.array([1.0, 0.0]))
        assert local_fidelity(self.model, s, [-5.0, 0.0], 1.0, FidelityConfig()) is None

    def test_accuracy_metric(self):
        s = LinearSurrogate(0.5, np.array([1.0, 0.0]))
        assert local_fidelity(self.model, s, [0.0, 0.0], 1.0, FidelityConfig(metric="accuracy")) == 1.0

    def test_deterministic(self, small_forest):
        s = LinearSurrogate(0.3, np.array([0.2, -0.4]))
        cfg = FidelityConfig(seed=11)
        assert local_fidelity(small_forest, s, [0.5, 0.0], 0.8, cfg) == local_fidelity(small_forest, s, [0.5, 0.0], 0.8, cfg)

    def test_radius_validated(self):
        with pytest.raises(InvalidArgumentError):
            local_fidelity(self.model, LinearSurrogate(0, np.zeros(2)), [0.0, 0.0], 0.0, FidelityConfig())

    def test_ls_on_halfspace(self):
        # max distance from x to the data is about 3, so r_fid = 0.05 gives a ball of radius ~0.15
        g = np.random.default_rng(0)
        data = Dataset(g.uniform(-2, 2, (400, 2)), np.arange(400) % 2)
        model = HalfspaceOracle([1.0, 0.3], -0.1)
        for seed in range(20):
            x = np.array([0.115 + 0.005 * (seed - 10), -0.05])  # within 0.05 of the hyperplane
            e = explain_ls(model, x, relative_radius(data, x, 1.0), ExplainerConfig("ls", n_samples=2000, seed=seed))
            r = relative_radius(data, x, 0.05)
            score = local_fidelity(model, e.surrogate, x, r, FidelityConfig(seed=seed))
            assert score is not None and score >= 0.99
            # independent estimate on a regular grid clipped to the same ball
            t = np.linspace(-r, r, 81)
            G = np.array([[a, b] for a in t for b in t if a * a + b * b <= r * r]) + x
            assert pair_count_auc(e.surrogate.score_batch(G[::7]), model.label_batch(G[::7])) >= 0.99


class TestRadiusSweep:
    def data(self):
        return Dataset(np.random.default_rng(1).normal(size=(200, 2)), np.arange(200) % 2)

    def test_singleton_matches_direct_call(self, small_forest):
        d, x = self.data(), np.array([0.3, 0.1])
        s = LinearSurrogate(0.4, np.array([0.3, -0.2]))
        cfg = FidelityConfig(seed=4)
        [(f, v)] = radius_sweep(small_forest, s, x, d, [0.3], cfg)
        assert f == 0.3
        assert v == local_fidelity(small_forest, s, x, relative_radius(d, x, 0.3), sweep_config(cfg, 0, 0.3))

    def test_shape(self, small_forest):
        out = radius_sweep(small_forest, LinearSurrogate(0.5, np.array([1.0, 0.0])), [0.0, 0.0], self.data(),
                           [0.05, 0.1, 0.2, 0.4, 0.8], FidelityConfig())
        assert [f for f, _ in out] == [0.05, 0.1, 0.2, 0.4, 0.8]
        assert all(v is None or 0 <= v <= 1 for _, v in out)

    @pytest.mark.parametrize("fractions", [[], [0.2, 0.1], [0.0, 0.5], [0.5, 1.5]])
    def test_invalid_fractions(self, small_forest, fractions):
        with pytest.raises(InvalidArgumentError):
            radius_sweep(small_forest, LinearSurrogate(0, np.zeros(2)), [0.0, 0.0], self.data(), fractions,
                         FidelityConfig())


class TestDatasetFidelity:
    def test_singleton_has_zero_std(self, small_forest, moons_split):
        train, test = moons_split
        one = test.subset([0])
        r = dataset_fidelity(small_forest, ExplainerConfig("lime", n_samples=500), one, train, FidelityConfig(0.2, 300))
        if r.n_skipped == 0:
            assert r.std_dev == 0.0 and r.mean == r.per_instance[0].score
        else:
            assert math.isnan(r.std_dev)

    def test_aggregates_recompute(self, small_forest, moons_split, tmp_path):
        train, test = moons_split
        part = test.subset(range(15))
        r = dataset_fidelity(small_forest, ExplainerConfig("lime", n_samples=500, seed=1), part, train,
                             FidelityConfig(0.2, 300, seed=1))
        vals = [p.score for p in r.per_instance if p.score is not None]
        assert len(vals) + r.n_skipped == 15
        assert r.mean == pytest.approx(sum(vals) / len(vals), abs=1e-12)
        m = sum(vals) / len(vals)
        assert r.std_dev == pytest.approx(math.sqrt(sum((v - m) ** 2 for v in vals) / len(vals)), abs=1e-12)
        d = r.to_dict()
        assert d["n_skipped"] == r.n_skipped and len(d["per_instance"]) == 15

        path = tmp_path / "heat.csv"
        write_heatmap(r, part, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["index", *part.feature_names, "score"]
        assert len(rows) == 16
        for row, p in zip(rows[1:], r.per_instance):
            assert row[-1] == ("" if p.score is None else repr(p.score))

    def test_failures_recorded_as_skips(self, moons_split):
        train, test = moons_split
        # every query deep inside a tiny ball oracle: growing spheres capped below the boundary
        model = BallOracle([100.0, 100.0], 0.1)
        cfg = ExplainerConfig("ls", n_samples=200, gs_n_per_step=50, gs_max_radius=0.05)
        r = dataset_fidelity(model, cfg, test.subset(range(3)), train, FidelityConfig(0.2, 100))
        assert r.n_skipped == 3 and all("BoundaryNotFound" in p.reason for p in r.per_instance)
        assert r.to_dict()["mean"] is None

    def test_empty_rejected(self, small_forest, moons_split):
        train, test = moons_split
        with pytest.raises(InvalidArgumentError):
            dataset_fidelity(small_forest, ExplainerConfig("lime"), test.subset([]), train, FidelityConfig())

    def test_per_instance_seeds_independent_of_subset(self, small_forest, moons_split):
        train, test = moons_split
        cfg, fid = ExplainerConfig("lime", n_samples=400, seed=2), FidelityConfig(0.2, 200, seed=2)
        full = dataset_fidelity(small_forest, cfg, test.subset(range(4)), train, fid)
        alone = dataset_fidelity(small_forest, cfg, test.subset([3]), train, fid, indices=[3])
        assert alone.per_instance[0] == full.per_instance[3]

    def test_seed_derivation_is_stable(self):
        assert _rng.derive_seed(0, _rng.EVALUATE, 5) == _rng.derive_seed(0, _rng.EVALUATE, 5)
        assert _rng.derive_seed(0, _rng.EVALUATE, 5) != _rng.derive_seed(0, _rng.EVALUATE, 6)
