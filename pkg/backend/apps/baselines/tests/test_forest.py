"""
Tests for the random-forest baseline.
"""
import json
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.baselines.forest import FOREST_VERSION, ForestHyper, ForestModel, fit_rfr
from apps.datasets.tests.test_files import small_dataset
from apps.forward.training import evaluate
from apps.patterns.pattern import Pattern
from utils.error_handling import CorruptCheckpoint, EmptyInputError, InvalidConfigError


class ForestFitTests(SimpleTestCase):
    """Tests for fit_rfr and predictions."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.train = small_dataset(n=40, master_seed=11)
        cls.forest = fit_rfr(cls.train, ForestHyper(n_trees=8, max_depth=6), seed=5)

    def test_depth_zero_single_tree_predicts_mean(self):
        forest = fit_rfr(self.train, ForestHyper(n_trees=1, max_depth=0, bootstrap=False), seed=0)
        expected = self.train.spectra().mean(axis=0)
        for i in range(3):
            np.testing.assert_allclose(forest.predict(self.train.sample(i).pattern).values, expected, rtol=1e-12)

    def test_single_sample_recalled(self):
        one = self.train.subset([7])
        forest = fit_rfr(one, ForestHyper(n_trees=3), seed=1)
        np.testing.assert_allclose(forest.predict(Pattern.zeros()).values, one.spectra()[0], rtol=1e-12)

    def test_leaves_hold_means_of_routed_targets(self):
        forest = fit_rfr(self.train, ForestHyper(n_trees=3, max_depth=5, min_samples_leaf=1, bootstrap=False), seed=2)
        X, y = self.train.flat_patterns(), self.train.spectra()
        for tree in forest.trees:
            leaves = tree.apply(X)
            for leaf in np.unique(leaves):
                np.testing.assert_allclose(tree.value[leaf], y[leaves == leaf].mean(axis=0), rtol=1e-10)

    def test_prediction_within_training_range(self):
        y = self.train.spectra()
        rng = np.random.default_rng(0)
        patterns = rng.integers(0, 2, size=(20, 16, 16)).astype(np.uint8)
        predicted = self.forest.predict_batch(patterns)
        self.assertTrue(np.all(predicted >= y.min(axis=0) - 1e-12))
        self.assertTrue(np.all(predicted <= y.max(axis=0) + 1e-12))

    def test_prediction_is_mean_of_trees(self):
        patterns = self.train.patterns()[:5]
        X = patterns.reshape(5, -1).astype(np.float64)
        per_tree = sum(tree.predict(X) for tree in self.forest.trees) / self.forest.n_trees
        np.testing.assert_allclose(self.forest.predict_batch(patterns), per_tree, rtol=1e-15)

    def test_deterministic(self):
        again = fit_rfr(self.train, ForestHyper(n_trees=8, max_depth=6), seed=5)
        self.assertEqual(json.dumps(again.to_dict()), json.dumps(self.forest.to_dict()))
        other = fit_rfr(self.train, ForestHyper(n_trees=8, max_depth=6), seed=6)
        self.assertNotEqual(json.dumps(other.to_dict()), json.dumps(self.forest.to_dict()))

    def test_worker_count_does_not_change_result(self):
        parallel = fit_rfr(self.train, ForestHyper(n_trees=8, max_depth=6), seed=5, workers=2)
        self.assertEqual(json.dumps(parallel.to_dict()), json.dumps(self.forest.to_dict()))

    def test_depth_limit(self):
        self.assertLessEqual(max(tree.depth for tree in self.forest.trees), 6)

    def test_fits_training_data_better_than_mean(self):
        spread = np.mean((self.train.spectra() - self.train.spectra().mean(axis=0)) ** 2)
        self.assertLess(evaluate(self.forest, self.train).mean, spread)

    def test_carries_grid_and_fingerprint(self):
        spectrum = self.forest.predict(self.train.sample(0).pattern)
        np.testing.assert_array_equal(spectrum.freqs, self.train.freqs)
        self.assertEqual(self.forest.solver_fingerprint, self.train.solver_fingerprint)

    def test_empty_training_set(self):
        with self.assertRaises(EmptyInputError):
            fit_rfr(self.train.subset([]), ForestHyper(n_trees=2), seed=0)

    def test_invalid_hyper(self):
        with self.assertRaises(InvalidConfigError):
            fit_rfr(self.train, ForestHyper(max_features=300), seed=0)
        with self.assertRaises(InvalidConfigError):
            fit_rfr(self.train, ForestHyper(n_trees=0), seed=0)


class ForestFileTests(SimpleTestCase):
    """Tests for the forest JSON document."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / 'forest.json'
        self.train = small_dataset(n=20, master_seed=4)
        self.forest = fit_rfr(self.train, ForestHyper(n_trees=4, max_depth=4), seed=9)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip_predictions(self):
        self.forest.save(self.path)
        loaded = ForestModel.load(self.path)
        patterns = self.train.patterns()
        np.testing.assert_array_equal(loaded.predict_batch(patterns), self.forest.predict_batch(patterns))
        self.assertEqual(loaded.seed, 9)
        self.assertEqual(loaded.hyper, self.forest.hyper)

    def test_trees_are_nested(self):
        self.forest.save(self.path)
        data = json.loads(self.path.read_text())
        self.assertEqual(data['version'], FOREST_VERSION)
        root = data['trees'][0]
        self.assertIn('threshold', root)
        self.assertIn('left', root)

    def test_version_mismatch(self):
        data = self.forest.to_dict()
        data['version'] = FOREST_VERSION + 1
        with self.assertRaises(CorruptCheckpoint):
            ForestModel.from_dict(data)

    def test_wrong_format(self):
        self.path.write_text(json.dumps({'format': 'other'}))
        with self.assertRaises(CorruptCheckpoint):
            ForestModel.load(self.path)

    def test_malformed_tree(self):
        data = self.forest.to_dict()
        data['trees'][0] = {'feature': 3, 'threshold': 0.5}
        with self.assertRaises(CorruptCheckpoint):
            ForestModel.from_dict(data)

    def test_missing_file(self):
        with self.assertRaises(InvalidConfigError):
            ForestModel.load(self.path)
