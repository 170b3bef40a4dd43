"""
Tests for forward-model specifications and networks.
"""
import tempfile

import numpy as np
import pytest
from django.test import SimpleTestCase

from apps.forward.networks import OUTPUT_EPS, ForwardModel, build_model, encode
from apps.forward.specs import Arch, ForwardModelSpec
from apps.patterns.pattern import Pattern
from utils.error_handling import InvalidConfigError, InvalidModelSpec, ShapeMismatchError

NARROW = {
    Arch.RESNET18S: {'widths': [4, 4, 8, 8]},
    Arch.RESNET34S: {'widths': [4, 4, 8, 8]},
    Arch.RESNA: {'widths': [4, 8, 8], 'lstm_hidden': 8},
}


def narrow_spec(arch) -> ForwardModelSpec:
    return ForwardModelSpec(arch=arch, **NARROW[arch])


def random_patterns(n, seed=0) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, size=(n, 16, 16)).astype(np.uint8)


class SpecTests(SimpleTestCase):
    """Tests for ForwardModelSpec validation."""

    def test_defaults(self):
        spec = ForwardModelSpec()
        self.assertEqual(spec.arch, Arch.RESNET18S)
        self.assertEqual(spec.widths, [32, 64, 128, 256])
        self.assertEqual(spec.residual_blocks, 8)
        self.assertEqual(ForwardModelSpec(arch='Resnet34S').residual_blocks, 14)
        self.assertEqual(ForwardModelSpec(arch='ResNa').residual_blocks, 0)

    def test_resnet18s_needs_eight_blocks(self):
        with self.assertRaises(InvalidModelSpec):
            ForwardModelSpec(arch='Resnet18S', blocks=[2, 2, 2, 1])

    def test_resnet34s_needs_more_blocks(self):
        with self.assertRaises(InvalidModelSpec):
            ForwardModelSpec(arch='Resnet34S', blocks=[2, 2, 2, 2])

    def test_resna_has_three_conv_blocks(self):
        with self.assertRaises(InvalidModelSpec):
            ForwardModelSpec(arch='ResNa', widths=[8, 8, 8, 8], blocks=[1, 1, 1, 1])

    def test_at_most_four_stages(self):
        with self.assertRaises(InvalidModelSpec):
            ForwardModelSpec(arch='Resnet34S', widths=[4] * 5, blocks=[2, 2, 2, 2, 2])

    def test_unknown_arch(self):
        with self.assertRaises(InvalidModelSpec):
            ForwardModelSpec(arch='VGG')

    def test_bad_slope(self):
        with self.assertRaises(InvalidModelSpec):
            ForwardModelSpec(leaky_slope=1.5)

    def test_dict_round_trip(self):
        spec = narrow_spec(Arch.RESNA)
        self.assertEqual(ForwardModelSpec.from_dict(spec.to_dict()), spec)
        with self.assertRaises(InvalidModelSpec):
            ForwardModelSpec.from_dict({**spec.to_dict(), 'dropout': 0.1})


class BuildTests(SimpleTestCase):
    """Tests for build_model."""

    def test_resnet18s_has_eight_residual_blocks(self):
        self.assertEqual(build_model(ForwardModelSpec(), seed=0).n_residual_blocks, 8)

    def test_param_count_ordering(self):
        counts = {arch: build_model(ForwardModelSpec(arch=arch), seed=0).param_count() for arch in Arch}
        self.assertGreater(counts[Arch.RESNET34S], counts[Arch.RESNET18S])
        self.assertGreater(counts[Arch.RESNET18S], counts[Arch.RESNA])

    def test_same_seed_same_parameters(self):
        for arch in Arch:
            a = build_model(narrow_spec(arch), seed=4)
            b = build_model(narrow_spec(arch), seed=4)
            self.assertEqual(a.store.digest(), b.store.digest())
        self.assertNotEqual(
            build_model(narrow_spec(Arch.RESNA), seed=4).store.digest(),
            build_model(narrow_spec(Arch.RESNA), seed=5).store.digest(),
        )


class PredictTests(SimpleTestCase):
    """Tests for predictions and checkpoints."""

    def test_encoding(self):
        x = encode(Pattern.full().cells)
        self.assertEqual(x.shape, (1, 1, 16, 16))
        self.assertTrue(np.all(x == 1.0))
        self.assertTrue(np.all(encode(Pattern.zeros().cells) == -1.0))
        with self.assertRaises(ShapeMismatchError):
            encode(np.zeros((2, 8, 8)))

    def test_outputs_in_unit_interval(self):
        for arch in Arch:
            model = build_model(narrow_spec(arch), seed=1)
            out = model.predict_batch(random_patterns(5))
            self.assertEqual(out.shape, (5, 32))
            self.assertTrue(np.all(np.isfinite(out)))
            self.assertTrue(np.all((out > 0.0) & (out < 1.0)))

    def test_identical_inputs_identical_outputs(self):
        model = build_model(narrow_spec(Arch.RESNET18S), seed=2)
        patterns = random_patterns(3)
        batch = np.concatenate([patterns, patterns[:1]])
        out = model.predict_batch(batch)
        np.testing.assert_array_equal(out[0], out[3])
        np.testing.assert_array_equal(model.predict(Pattern(patterns[0].copy())).values, out[0])

    def test_saturated_head_is_clamped(self):
        model = build_model(narrow_spec(Arch.RESNET18S), seed=1)
        model.store['head.b'].data[:] = 100.0
        out = model.predict_batch(random_patterns(3))
        self.assertTrue(np.all(out == 1.0 - OUTPUT_EPS))
        model.store['head.b'].data[:] = -100.0
        self.assertTrue(np.all(model.predict_batch(random_patterns(3)) == OUTPUT_EPS))

    @pytest.mark.slow
    def test_default_resnet34s_outputs_inside_unit_interval(self):
        model = build_model(ForwardModelSpec(arch=Arch.RESNET34S), seed=1)
        out = model.predict_batch(random_patterns(4))
        self.assertTrue(np.all((out > 0.0) & (out < 1.0)))
        self.assertGreater(np.ptp(out), 0.0)

    def test_repeated_rows_match_across_positions(self):
        model = build_model(narrow_spec(Arch.RESNET34S), seed=1)
        patterns = random_patterns(6, seed=3)
        batch = np.concatenate([patterns[:1], patterns, patterns[:1], patterns[2:3]])
        out = model.predict_batch(batch)
        self.assertEqual(out.shape, (9, 32))
        np.testing.assert_array_equal(out[0], out[1])
        np.testing.assert_array_equal(out[0], out[7])
        np.testing.assert_array_equal(out[3], out[8])
        np.testing.assert_array_equal(out[1:7], model.predict_batch(patterns))

    def test_predict_returns_spectrum_on_grid(self):
        model = build_model(narrow_spec(Arch.RESNA), seed=0)
        spectrum = model.predict(Pattern.zeros())
        np.testing.assert_array_equal(spectrum.freqs, model.freqs)
        self.assertEqual(len(spectrum.values), 32)

    def test_checkpoint_round_trip(self):
        patterns = random_patterns(4)
        for arch in Arch:
            model = build_model(narrow_spec(arch), seed=3)
            model.solver_fingerprint = 'abc'
            with tempfile.TemporaryDirectory() as tmp:
                model.save(tmp)
                loaded = ForwardModel.load(tmp)
            self.assertEqual(loaded.spec, model.spec)
            self.assertEqual(loaded.solver_fingerprint, 'abc')
            np.testing.assert_array_equal(loaded.predict_batch(patterns), model.predict_batch(patterns))

    def test_missing_checkpoint(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(InvalidConfigError):
                ForwardModel.load(tmp)
