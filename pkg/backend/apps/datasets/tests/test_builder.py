"""
Tests for dataset generation.
"""
import numpy as np
import pytest
from django.test import SimpleTestCase

from apps.datasets.builder import build_dataset, derive_seed
from apps.datasets.tests.test_files import fill_simulator
from apps.patterns.generators import PatternParams, generate_pattern
from apps.patterns.pattern import Pattern
from apps.solver.config import SolverConfig
from apps.solver.spectrum import Spectrum
from utils.error_handling import (
    DatasetBuildError,
    InvalidConfigError,
    InvalidParameter,
    InvalidSpectrumError,
    SolverNonConvergence,
)

FLAKY_MASTER_SEED = 11


def flaky_simulator(p: Pattern, cfg: SolverConfig) -> Spectrum:
    """Fails on the first attempt of sample 1 only."""
    if p.seed == derive_seed(FLAKY_MASTER_SEED, 1, 0):
        raise SolverNonConvergence(-12.0, 100)
    return fill_simulator(p, cfg)


def failing_simulator(p: Pattern, cfg: SolverConfig) -> Spectrum:
    raise SolverNonConvergence(-3.0, 50)


def overshooting_simulator(p: Pattern, cfg: SolverConfig) -> Spectrum:
    freqs = cfg.freqs()
    return Spectrum(freqs, np.full(len(freqs), 1.5))


class SeedDerivationTests(SimpleTestCase):
    """Tests for derive_seed."""

    def test_stable_and_distinct(self):
        seeds = [derive_seed(42, i) for i in range(100)]
        self.assertEqual(seeds, [derive_seed(42, i) for i in range(100)])
        self.assertEqual(len(set(seeds)), 100)
        self.assertTrue(all(0 <= s < 2 ** 64 for s in seeds))

    def test_retry_seed_differs(self):
        self.assertNotEqual(derive_seed(42, 3, 0), derive_seed(42, 3, 1))

    def test_master_seed_matters(self):
        self.assertNotEqual(derive_seed(1, 0), derive_seed(2, 0))

    def test_rejects_out_of_range_seeds(self):
        for bad in (-1, 2 ** 64, 1.5, True):
            with self.assertRaises(InvalidParameter):
                derive_seed(bad, 0)
        with self.assertRaises(InvalidParameter):
            derive_seed(42, -1)
        with self.assertRaises(InvalidParameter):
            derive_seed(42, 0, -2)
        self.assertEqual(derive_seed(2 ** 64 - 1, 0), derive_seed(2 ** 64 - 1, 0))

    def test_invalid_parameter_is_a_config_error(self):
        self.assertTrue(issubclass(InvalidParameter, InvalidConfigError))


class BuildDatasetTests(SimpleTestCase):
    """Tests for build_dataset with a cheap stand-in simulator."""

    def test_worker_count_does_not_change_bytes(self):
        serial = build_dataset('PLG', 6, 99, SolverConfig(), workers=1, simulator=fill_simulator)
        parallel = build_dataset('PLG', 6, 99, SolverConfig(), workers=3, simulator=fill_simulator)
        self.assertEqual(serial.to_bytes(), parallel.to_bytes())

    def test_reproducible(self):
        a = build_dataset('PTN', 4, 7, SolverConfig(), simulator=fill_simulator)
        b = build_dataset('PTN', 4, 7, SolverConfig(), simulator=fill_simulator)
        self.assertEqual(a.fingerprint(), b.fingerprint())

    def test_record_independence(self):
        short = build_dataset('RDN', 3, 5, SolverConfig(), simulator=fill_simulator)
        long = build_dataset('RDN', 6, 5, SolverConfig(), simulator=fill_simulator)
        self.assertEqual(short.records.tobytes(), long.records[:3].tobytes())

    def test_samples_match_generator(self):
        params = PatternParams(fill_prob=0.3)
        ds = build_dataset('RDN', 3, 8, SolverConfig(), params=params, simulator=fill_simulator)
        for i, sample in enumerate(ds):
            self.assertEqual(sample.gen_seed, derive_seed(8, i))
            expected = generate_pattern('RDN', sample.gen_seed, params)
            self.assertTrue(np.array_equal(sample.pattern.cells, expected.cells))

    def test_retry_with_new_seed(self):
        ds = build_dataset('RDN', 3, FLAKY_MASTER_SEED, SolverConfig(), simulator=flaky_simulator)
        seeds = ds.seeds().tolist()
        self.assertEqual(seeds[0], derive_seed(FLAKY_MASTER_SEED, 0))
        self.assertEqual(seeds[1], derive_seed(FLAKY_MASTER_SEED, 1, 1))
        self.assertEqual(seeds[2], derive_seed(FLAKY_MASTER_SEED, 2))

    def test_persistent_failure_names_index(self):
        with self.assertRaises(DatasetBuildError) as ctx:
            build_dataset('RDN', 2, 0, SolverConfig(), simulator=failing_simulator)
        self.assertEqual(ctx.exception.index, 0)
        self.assertIsInstance(ctx.exception.cause, SolverNonConvergence)

    def test_invalid_spectrum_is_not_retried(self):
        with self.assertRaises(InvalidSpectrumError):
            build_dataset('RDN', 2, 0, SolverConfig(), simulator=overshooting_simulator)

    def test_negative_master_seed(self):
        with self.assertRaises(InvalidParameter):
            build_dataset('RDN', 2, -5, SolverConfig(), simulator=fill_simulator)

    def test_invalid_arguments(self):
        with self.assertRaises(InvalidConfigError):
            build_dataset('RDN', 0, 0, SolverConfig(), simulator=fill_simulator)
        with self.assertRaises(InvalidConfigError):
            build_dataset('RDN', 1, 0, SolverConfig(), workers=0, simulator=fill_simulator)
        with self.assertRaises(InvalidConfigError):
            build_dataset('OTHER', 1, 0, SolverConfig(), simulator=fill_simulator)
        with self.assertRaises(InvalidConfigError):
            build_dataset('RDN', 1, 0, SolverConfig(n_freq=16), simulator=fill_simulator)


@pytest.mark.slow
class SolverBackedBuildTests(SimpleTestCase):
    """Two samples through the real solver on a coarse grid."""

    def test_build_with_solver(self):
        cfg = SolverConfig(lateral_step=0.5e-3, vertical_step=0.5e-3, air_height=6e-3)
        ds = build_dataset('RDN', 2, 1, cfg)
        self.assertEqual(len(ds), 2)
        spectra = ds.spectra()
        self.assertTrue(np.all(spectra >= 0.0))
        self.assertTrue(np.all(spectra <= 1.02))
