"""
Tests for the generator, the judge and binarization.
"""
import tempfile

import numpy as np
from django.test import SimpleTestCase

from apps.autodiff.tensor import Tensor
from apps.inverse.networks import (
    Generator,
    GeneratorSpec,
    JudgeSpec,
    binarize,
    build_generator,
    build_judge,
    judge_strides,
)
from apps.patterns.pattern import PatternClass
from utils.error_handling import InvalidModelSpec, ShapeMismatchError

SMALL_GENERATOR = GeneratorSpec(noise_dim=8, widths=[8, 8, 4, 4])
SMALL_JUDGE = JudgeSpec(widths=[4, 4, 8, 8])


def noise_and_targets(generator, n, seed=0):
    rng = np.random.default_rng(seed)
    return generator.sample_noise(rng, n), rng.uniform(0.2, 1.0, size=(n, 32))


class GeneratorTests(SimpleTestCase):
    """Tests for the conditional generator."""

    def test_five_transposed_conv_blocks(self):
        generator = build_generator(SMALL_GENERATOR, seed=0)
        self.assertEqual(len(generator.upsample) + 1, 5)
        kernels = [name for name, _ in generator.store if name.endswith('.k')]
        self.assertEqual(len(kernels), 5)

    def test_output_shape_and_range(self):
        generator = build_generator(SMALL_GENERATOR, seed=0)
        z, targets = noise_and_targets(generator, 3)
        out = generator.forward(z, targets, training=True)
        self.assertEqual(out.shape, (3, 1, 16, 16))
        self.assertTrue(np.all(np.abs(out.data) <= 1.0))
        self.assertEqual(generator.generate(z, targets).shape, (3, 16, 16))

    def test_noise_is_uniform_in_unit_box(self):
        generator = build_generator(SMALL_GENERATOR, seed=0)
        z = generator.sample_noise(np.random.default_rng(0), 500)
        self.assertEqual(z.shape, (500, 8))
        self.assertTrue(np.all((z >= -1.0) & (z <= 1.0)))

    def test_noise_changes_output(self):
        generator = build_generator(SMALL_GENERATOR, seed=1)
        z, targets = noise_and_targets(generator, 2)
        same_target = np.tile(targets[:1], (2, 1))
        out = generator.generate(z, same_target)
        self.assertFalse(np.array_equal(out[0], out[1]))

    def test_widths_count(self):
        with self.assertRaises(InvalidModelSpec):
            build_generator(GeneratorSpec(widths=[8, 8, 8]), seed=0)

    def test_input_shapes(self):
        generator = build_generator(SMALL_GENERATOR, seed=0)
        with self.assertRaises(ShapeMismatchError):
            generator.forward(np.zeros((2, 7)), np.zeros((2, 32)))
        with self.assertRaises(ShapeMismatchError):
            generator.forward(np.zeros((2, 8)), np.zeros((3, 32)))

    def test_checkpoint_round_trip(self):
        generator = build_generator(SMALL_GENERATOR, seed=2)
        generator.solver_fingerprint = 'f00'
        z, targets = noise_and_targets(generator, 4)
        with tempfile.TemporaryDirectory() as tmp:
            generator.save(tmp)
            loaded = Generator.load(tmp)
        self.assertEqual(loaded.spec, generator.spec)
        self.assertEqual(loaded.solver_fingerprint, 'f00')
        np.testing.assert_array_equal(loaded.generate(z, targets), generator.generate(z, targets))


class JudgeTests(SimpleTestCase):
    """Tests for the judge."""

    def test_strides_stop_at_two_by_two(self):
        self.assertEqual(judge_strides(4), [2, 2, 2, 1])
        self.assertEqual(judge_strides(2), [2, 2])

    def test_one_logit_per_pattern(self):
        judge = build_judge(SMALL_JUDGE, seed=0)
        x = Tensor(np.random.default_rng(0).uniform(-1, 1, size=(5, 1, 16, 16)))
        self.assertEqual(judge.forward(x, training=True).shape, (5, 1))

    def test_empty_widths(self):
        with self.assertRaises(InvalidModelSpec):
            build_judge(JudgeSpec(widths=[]), seed=0)


class BinarizeTests(SimpleTestCase):
    """Tests for binarize."""

    def test_all_negative_gives_empty_pattern(self):
        self.assertEqual(binarize(np.full((16, 16), -1.0)).ones, 0)

    def test_all_positive_gives_full_pattern(self):
        self.assertEqual(binarize(np.full((16, 16), 1.0)).ones, 256)

    def test_zero_is_empty(self):
        self.assertEqual(binarize(np.zeros((16, 16))).ones, 0)

    def test_idempotent_through_encoding(self):
        g = np.random.default_rng(3).uniform(-1, 1, size=(16, 16))
        p = binarize(g)
        self.assertEqual(binarize(p.encoded()), p)
        self.assertEqual(p.class_tag, PatternClass.OTHER)

    def test_shape(self):
        with self.assertRaises(ShapeMismatchError):
            binarize(np.zeros((8, 8)))
