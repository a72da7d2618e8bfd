import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hae import outlier as iso
from hae.errors import ConfigurationError, UsageError


def tight_cluster_with_outlier(seed, n=256, d=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    X[0] = 8.0 * np.ones(d) / np.sqrt(d)
    return X


class TestCFactor:
    def test_small_values(self):
        assert iso.c_factor(0) == 0.0
        assert iso.c_factor(1) == 0.0
        assert iso.c_factor(2) == 1.0

    def test_formula(self):
        m = 256
        assert iso.c_factor(m) == pytest.approx(
            2 * (math.log(m - 1) + 0.5772156649) - 2 * (m - 1) / m, abs=1e-15)


class TestBuildTree:
    def test_two_points(self):
        t = iso.build_tree(np.array([[0.0, 1.0], [1.0, 3.0]]), 1, np.random.default_rng(0))
        root = t.as_nodes()
        assert isinstance(root, iso.Split)
        assert root.left == iso.Leaf(1, 1) and root.right == iso.Leaf(1, 1)

    def test_constant_data(self):
        X = np.ones((20, 3))
        f = iso.fit(X, iso.ForestConfig(n_trees=5), seed=0)
        for t in f.trees:
            assert t.n_nodes == 1
        assert np.ptp(iso.anomaly_scores(f, X)) == 0

    def test_thresholds_strictly_inside(self, rng):
        X = rng.normal(size=(64, 3))
        t = iso.build_tree(X, 6, rng)

        def walk(node, rows):
            if isinstance(node, iso.Leaf):
                assert node.size == len(rows) and node.depth <= 6
                return
            col = rows[:, node.feature]
            assert col.min() < node.threshold < col.max()
            mask = col < node.threshold
            walk(node.left, rows[mask])
            walk(node.right, rows[~mask])

        walk(t.as_nodes(), X)

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_tape_reference(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 65))
        X = np.round(rng.normal(size=(n, 3)), 1)  # rounding creates ties and duplicates
        height = math.ceil(math.log2(n))
        recorder = oracles.TapeRecorder(np.random.default_rng(1000 + seed))
        tree = iso.build_tree(X, height, recorder)
        replay = oracles.TapeReplay(recorder.tape)
        ref = oracles.reference_tree([tuple(r) for r in X], 0, height, replay)
        assert replay.pos == len(recorder.tape)
        assert oracles.tree_as_tuples(tree.as_nodes()) == ref


class TestFit:
    def test_too_few_rows(self):
        with pytest.raises(UsageError):
            iso.fit(np.zeros((1, 3)))

    @pytest.mark.parametrize("kwargs", [{"n_trees": 0}, {"contamination": 0.6},
                                        {"contamination": 0.0}, {"subsample_size": 1}])
    def test_bad_config(self, kwargs):
        with pytest.raises(ConfigurationError):
            iso.ForestConfig(**kwargs)

    def test_deterministic(self, rng):
        X = rng.normal(size=(300, 4))
        a, b = iso.fit(X, seed=3), iso.fit(X, seed=3)
        for ta, tb in zip(a.trees, b.trees):
            assert oracles.tree_as_tuples(ta.as_nodes()) == oracles.tree_as_tuples(tb.as_nodes())
        assert a.score_threshold == b.score_threshold

    def test_subsample_clipped(self, rng):
        f = iso.fit(rng.normal(size=(50, 2)), iso.ForestConfig(n_trees=3))
        assert f.subsample_size == 50 and f.height_limit == 6 and f.n_trees == 3

    def test_degenerate_flag(self, caplog):
        f = iso.fit(np.zeros((10, 2)), iso.ForestConfig(n_trees=3))
        assert f.degenerate
        assert "degenerate" in caplog.text

    def test_training_outlier_fraction(self, rng):
        X = rng.normal(size=(1000, 4))
        f = iso.fit(X, iso.ForestConfig(contamination=0.1), seed=1)
        frac = iso.predict(f, X).mean()
        assert abs(frac - 0.1) <= 2 / np.sqrt(1000)


class TestScores:
    def test_half_at_expected_depth(self):
        # a single leaf of size psi gives E[h] = c(psi)
        f = iso.fit(np.zeros((16, 1)), iso.ForestConfig(n_trees=2, subsample_size=16))
        assert iso.anomaly_score(f, [0.0]) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_far_outlier_scores_highest(self, seed):
        X = tight_cluster_with_outlier(seed)
        scores = iso.anomaly_scores(iso.fit(X, seed=seed), X)
        assert np.argmax(scores) == 0

    def test_width_mismatch(self, rng):
        f = iso.fit(rng.normal(size=(20, 3)), iso.ForestConfig(n_trees=2))
        with pytest.raises(UsageError):
            iso.anomaly_score(f, [1.0, 2.0])

    def test_empty_predict(self, rng):
        f = iso.fit(rng.normal(size=(20, 3)), iso.ForestConfig(n_trees=2))
        assert iso.predict(f, np.zeros((0, 3))).shape == (0,)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_scores_bounded_and_duplicates_equal(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(40, 3))
        X[5] = X[11]
        f = iso.fit(X, iso.ForestConfig(n_trees=10), seed=seed)
        queries = np.vstack([X, rng.normal(scale=5, size=(10, 3))])
        s = iso.anomaly_scores(f, queries)
        assert np.all((s > 0) & (s < 1))
        assert s[5] == s[11]

    def test_monotone_in_mean_depth(self, rng):
        X = rng.normal(size=(128, 2))
        f = iso.fit(X, iso.ForestConfig(n_trees=20), seed=0)
        Q = rng.normal(scale=3, size=(50, 2))
        mean_h = np.mean([t.path_lengths(Q) for t in f.trees], axis=0)
        s = iso.anomaly_scores(f, Q)
        order = np.argsort(mean_h)
        deeper = np.diff(mean_h[order]) > 0
        assert np.all(np.diff(s[order])[deeper] < 0)


def test_persistence_round_trip(rng):
    X = rng.normal(size=(80, 4))
    f = iso.fit(X, iso.ForestConfig(n_trees=7, contamination=0.05), seed=2)
    g = iso.forest_from_arrays(iso.forest_arrays(f))
    np.testing.assert_array_equal(iso.anomaly_scores(f, X), iso.anomaly_scores(g, X))
    assert (g.score_threshold, g.n_trees, g.subsample_size, g.seed) == (
        f.score_threshold, 7, 80, 2)


def test_agrees_with_sklearn_on_clear_outlier():
    sklearn_ensemble = pytest.importorskip("sklearn.ensemble")
    X = tight_cluster_with_outlier(0)
    ours = iso.anomaly_scores(iso.fit(X, seed=0), X)
    theirs = -sklearn_ensemble.IsolationForest(random_state=0).fit(X).score_samples(X)
    assert np.argmax(ours) == np.argmax(theirs) == 0
    assert np.corrcoef(ours, theirs)[0, 1] > 0.9
