"""
Tests for inverse training and candidate search.
"""
import tempfile
from pathlib import Path

import numpy as np
import pytest
from django.test import SimpleTestCase

from apps.datasets.tests.test_files import fill_simulator, small_dataset
from apps.forward.networks import build_model
from apps.forward.specs import ForwardModelSpec
from apps.inverse.design import inverse_design, msd
from apps.inverse.networks import Generator, binarize, build_generator
from apps.inverse.training import CLOSED_LOOP, PRETRAIN, InverseHyper, train_inverse
from apps.inverse.tests.test_networks import SMALL_GENERATOR, SMALL_JUDGE
from apps.solver.config import SolverConfig
from apps.solver.spectrum import Spectrum
from utils.error_handling import EmptyInputError, FrozenEvaluatorModified, GridMismatch, InvalidConfigError


def small_evaluator(seed=0):
    return build_model(ForwardModelSpec(arch='ResNa', widths=[4, 8, 8], lstm_hidden=8), seed=seed)


def quick_hyper(**overrides):
    values = {'noise_dim': 8, 'lambda_d': 10.0, 'pretrain_epochs': 1, 'epochs': 2, 'batch_size': 8,
              'lr': 2e-3, 'val_targets': 4}
    values.update(overrides)
    return InverseHyper(**values)


class TrainInverseTests(SimpleTestCase):
    """Tests for train_inverse."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.train = small_dataset(n=12, master_seed=5)

    def test_evaluator_untouched(self):
        evaluator = small_evaluator()
        before = evaluator.store.digest()
        _, history = train_inverse(SMALL_GENERATOR, SMALL_JUDGE, evaluator, self.train, quick_hyper(), seed=0)
        self.assertEqual(evaluator.store.digest(), before)
        self.assertEqual(history.evaluator_digest, before)

    def test_history(self):
        generator, history = train_inverse(SMALL_GENERATOR, SMALL_JUDGE, small_evaluator(), self.train,
                                           quick_hyper(), seed=0)
        self.assertEqual([r.epoch for r in history.epochs], [1, 2, 3])
        self.assertEqual([r.stage for r in history.epochs], [PRETRAIN, CLOSED_LOOP, CLOSED_LOOP])
        self.assertIn(history.best_epoch, (2, 3))
        self.assertEqual(history.best_d_median, min(r.d_median for r in history.epochs[1:]))
        for record in history.epochs:
            self.assertGreaterEqual(record.judge_accuracy, 0.0)
            self.assertLessEqual(record.judge_accuracy, 1.0)
            self.assertGreaterEqual(record.d_median, 0.0)
        self.assertEqual(generator.spec.noise_dim, 8)
        np.testing.assert_array_equal(generator.freqs, self.train.freqs)

    def test_pure_adversarial(self):
        _, history = train_inverse(SMALL_GENERATOR, SMALL_JUDGE, small_evaluator(), self.train,
                                   quick_hyper(lambda_d=0.0, pretrain_epochs=2, epochs=0), seed=0)
        self.assertEqual(history.best_epoch, 2)
        self.assertTrue(all(r.stage == PRETRAIN for r in history.epochs))

    def test_deterministic(self):
        _, a = train_inverse(SMALL_GENERATOR, SMALL_JUDGE, small_evaluator(), self.train, quick_hyper(), seed=4)
        _, b = train_inverse(SMALL_GENERATOR, SMALL_JUDGE, small_evaluator(), self.train, quick_hyper(), seed=4)
        self.assertEqual([r.d_median for r in a.epochs], [r.d_median for r in b.epochs])
        self.assertEqual([r.judge_loss for r in a.epochs], [r.judge_loss for r in b.epochs])

    def test_modified_evaluator_detected(self):
        evaluator = small_evaluator()
        forward = evaluator.forward

        def drifting_forward(x, training=False):
            evaluator.store.buffers['conv0.bn.running_mean'] += 1.0
            return forward(x, training)

        evaluator.forward = drifting_forward
        with self.assertRaises(FrozenEvaluatorModified):
            train_inverse(SMALL_GENERATOR, SMALL_JUDGE, evaluator, self.train, quick_hyper(), seed=0)

    def test_evaluator_trainable_afterwards(self):
        evaluator = small_evaluator()
        train_inverse(SMALL_GENERATOR, SMALL_JUDGE, evaluator, self.train, quick_hyper(), seed=0)
        self.assertTrue(all(tensor.requires_grad for _, tensor in evaluator.store))

    def test_evaluator_flags_restored_after_failure(self):
        evaluator = small_evaluator()
        evaluator.store['head.b'].requires_grad = False
        forward = evaluator.forward

        def drifting_forward(x, training=False):
            evaluator.store.buffers['conv0.bn.running_mean'] += 1.0
            return forward(x, training)

        evaluator.forward = drifting_forward
        with self.assertRaises(FrozenEvaluatorModified):
            train_inverse(SMALL_GENERATOR, SMALL_JUDGE, evaluator, self.train, quick_hyper(), seed=0)
        flags = {name: tensor.requires_grad for name, tensor in evaluator.store}
        self.assertFalse(flags.pop('head.b'))
        self.assertTrue(all(flags.values()))

    def test_one_training_pass_per_batch(self):
        training_batches = []
        forward = Generator.forward

        def counting_forward(generator, z, conditions, training=False):
            if training:
                training_batches.append(len(z))
            return forward(generator, z, conditions, training)

        Generator.forward = counting_forward
        self.addCleanup(setattr, Generator, 'forward', forward)
        train_inverse(SMALL_GENERATOR, SMALL_JUDGE, small_evaluator(), self.train,
                      quick_hyper(pretrain_epochs=1, epochs=1, batch_size=8), seed=0)
        self.assertEqual(training_batches, [8, 4, 8, 4])

    def test_grid_mismatch(self):
        evaluator = small_evaluator()
        evaluator.freqs = evaluator.freqs * 2
        with self.assertRaises(GridMismatch):
            train_inverse(SMALL_GENERATOR, SMALL_JUDGE, evaluator, self.train, quick_hyper(), seed=0)

    def test_empty_dataset(self):
        with self.assertRaises(EmptyInputError):
            train_inverse(SMALL_GENERATOR, SMALL_JUDGE, small_evaluator(), self.train.subset([]), quick_hyper(),
                          seed=0)

    @pytest.mark.slow
    def test_closed_loop_reduces_median_d(self):
        train = small_dataset(n=48, master_seed=9)
        _, history = train_inverse(SMALL_GENERATOR, SMALL_JUDGE, small_evaluator(), train,
                                   quick_hyper(pretrain_epochs=0, epochs=15, val_targets=16), seed=0)
        self.assertLess(history.best_d_median, history.epochs[0].d_median)


class InverseDesignTests(SimpleTestCase):
    """Tests for inverse_design."""

    def setUp(self):
        self.generator = build_generator(SMALL_GENERATOR, seed=3)
        self.evaluator = small_evaluator(seed=1)
        self.target = small_dataset(n=1).sample(0).spectrum

    def test_single_candidate(self):
        result = inverse_design(self.target, self.generator, self.evaluator, n_candidates=1, seed=7)
        z = self.generator.sample_noise(np.random.default_rng(7), 1)
        expected = binarize(self.generator.generate(z, self.target.values[None])[0])
        self.assertEqual(result.pattern, expected)
        self.assertEqual(result.n_candidates, 1)
        self.assertFalse(result.collapsed)
        self.assertIsNone(result.e)

    def test_picks_lowest_d(self):
        result = inverse_design(self.target, self.generator, self.evaluator, n_candidates=16, seed=0, verify_top=16)
        ds = [c.d for c in result.ranking]
        self.assertEqual(ds, sorted(ds))
        self.assertEqual(result.d, ds[0])
        self.assertAlmostEqual(result.d, msd(result.predicted.values, self.target.values), places=15)
        self.assertGreaterEqual(result.distinct_candidates, 1)

    def test_verification_metrics(self):
        result = inverse_design(self.target, self.generator, self.evaluator, n_candidates=8, verify=True,
                                cfg=SolverConfig(), seed=0, verify_top=3, simulator=fill_simulator)
        expected = fill_simulator(result.pattern, SolverConfig())
        np.testing.assert_allclose(result.verified.values, expected.values)
        self.assertAlmostEqual(result.e, msd(expected.values, self.target.values), places=15)
        self.assertAlmostEqual(result.b, msd(result.predicted.values, expected.values), places=15)
        self.assertLessEqual(np.sqrt(result.b), np.sqrt(result.d) + np.sqrt(result.e) + 1e-12)
        self.assertTrue(all(c.e is not None for c in result.ranking))

    def test_export(self):
        result = inverse_design(self.target, self.generator, self.evaluator, n_candidates=4, verify=True,
                                seed=0, simulator=fill_simulator)
        with tempfile.TemporaryDirectory() as tmp:
            result.export(tmp)
            self.assertEqual((Path(tmp) / 'pattern.txt').read_text(), result.pattern.to_text())
            header = (Path(tmp) / 'spectra.csv').read_text().splitlines()[0]
            self.assertEqual(header, 'freq_hz,target,predicted,verified')
            self.assertTrue((Path(tmp) / 'result.json').exists())

    def test_grid_mismatch(self):
        target = Spectrum(self.target.freqs[:16], self.target.values[:16])
        with self.assertRaises(GridMismatch):
            inverse_design(target, self.generator, self.evaluator, n_candidates=2)

    def test_candidate_count(self):
        with self.assertRaises(InvalidConfigError):
            inverse_design(self.target, self.generator, self.evaluator, n_candidates=0)
