"""
Tests for the solver configuration, the spectrum type and the slab oracle.
"""
import json
import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from apps.solver.analytic import analytic_slab_coPR
from apps.solver.config import C0, SolverConfig
from apps.solver.spectrum import Spectrum
from utils.error_handling import InvalidSolverConfig, InvalidSpectrumError


class SolverConfigTests(SimpleTestCase):
    """Tests for SolverConfig."""

    def test_defaults(self):
        cfg = SolverConfig().validate()
        self.assertAlmostEqual(cfg.cell_size, 10.0e-3)
        self.assertEqual(cfg.nx, 40)
        self.assertEqual(cfg.pitch_cells, 2)
        self.assertEqual(cfg.pad_cells, 4)
        self.assertEqual(cfg.substrate_cells, 12)
        self.assertEqual(cfg.n_freq, 32)
        self.assertAlmostEqual(cfg.substrate_eps_r.real, 2.65)
        self.assertAlmostEqual(cfg.substrate_eps_r.imag, 2.65 * 0.003)

    def test_freqs_inclusive_uniform(self):
        freqs = SolverConfig().freqs()
        self.assertEqual(len(freqs), 32)
        self.assertEqual(freqs[0], 2.0e9)
        self.assertEqual(freqs[-1], 12.0e9)
        self.assertTrue(np.allclose(np.diff(freqs), (10.0e9) / 31))

    def test_step_must_divide_pitch(self):
        with self.assertRaises(InvalidSolverConfig):
            SolverConfig(lateral_step=0.3e-3).validate()

    def test_step_must_divide_pad(self):
        with self.assertRaises(InvalidSolverConfig):
            SolverConfig(pad=1.1e-3, lateral_step=0.5e-3).validate()

    def test_only_zeroth_order_propagates(self):
        # 10 mm cell needs band_hi below c / 10 mm = 29.98 GHz
        self.assertLess(C0 / 12e9, 0.03)
        with self.assertRaises(InvalidSolverConfig):
            SolverConfig(band_hi=31e9).validate()

    def test_band_order(self):
        with self.assertRaises(InvalidSolverConfig):
            SolverConfig(band_lo=12e9, band_hi=2e9).validate()
        with self.assertRaises(InvalidSolverConfig):
            SolverConfig(n_freq=0).validate()

    def test_class_presets(self):
        plg = SolverConfig.for_class('PLG')
        self.assertEqual((plg.band_lo, plg.band_hi), (9.5e9, 12.0e9))
        rdn = SolverConfig.for_class('RDN')
        self.assertEqual((rdn.band_lo, rdn.band_hi), (2.0e9, 12.0e9))

    def test_lossless(self):
        cfg = SolverConfig().lossless()
        self.assertEqual(cfg.substrate_eps_r, complex(2.65, 0.0))
        self.assertTrue(cfg.lossless_substrate)

    def test_json_round_trip(self):
        cfg = SolverConfig(substrate_thickness=1.5e-3, max_steps=1234)
        data = json.loads(json.dumps(cfg.to_dict()))
        self.assertEqual(data['substrate_eps_r'], [2.65, 2.65 * 0.003])
        self.assertEqual(SolverConfig.from_dict(data), cfg)

    def test_unknown_keys_rejected(self):
        with self.assertRaises(InvalidSolverConfig):
            SolverConfig.from_dict({'mesh': 'fine'})

    def test_fingerprint(self):
        self.assertEqual(SolverConfig().fingerprint(), SolverConfig().fingerprint())
        self.assertNotEqual(SolverConfig().fingerprint(), SolverConfig().lossless().fingerprint())
        self.assertEqual(len(SolverConfig().fingerprint()), 64)


class AnalyticSlabTests(SimpleTestCase):
    """Tests for analytic_slab_coPR."""

    def test_lossless_reflects_fully(self):
        cfg = SolverConfig().lossless()
        for f in (2e9, 7.3e9, 12e9, 40e9):
            self.assertAlmostEqual(analytic_slab_coPR(f, cfg), 1.0, places=12)

    def test_vanishing_thickness(self):
        cfg = SolverConfig(substrate_thickness=1e-12)
        self.assertAlmostEqual(analytic_slab_coPR(10e9, cfg), 1.0, places=6)

    def test_default_at_ten_gigahertz(self):
        value = analytic_slab_coPR(10e9, SolverConfig())
        self.assertGreater(value, 0.97)
        self.assertLess(value, 1.0)

    def test_array_input(self):
        cfg = SolverConfig()
        values = analytic_slab_coPR(cfg.freqs(), cfg)
        self.assertEqual(values.shape, (32,))
        self.assertTrue(((values > 0.9) & (values <= 1.0)).all())

    def test_rejects_non_positive_frequency(self):
        with self.assertRaises(ValueError):
            analytic_slab_coPR(0.0, SolverConfig())


class SpectrumTests(SimpleTestCase):
    """Tests for Spectrum."""

    def test_csv_round_trip(self):
        freqs = SolverConfig().freqs()
        spectrum = Spectrum(freqs, np.linspace(0.1, 0.9, 32) ** 1.5)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'spectrum.csv')
            spectrum.to_csv(path)
            with open(path) as handle:
                lines = handle.read().splitlines()
            self.assertEqual(lines[0], 'freq_hz,copr')
            self.assertEqual(len(lines), 33)
            self.assertEqual(Spectrum.from_csv(path), spectrum)

    def test_wrong_header(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.csv')
            with open(path, 'w') as handle:
                handle.write('f,r\n1,0.5\n')
            with self.assertRaises(InvalidSpectrumError):
                Spectrum.from_csv(path)

    def test_validate_range(self):
        freqs = SolverConfig().freqs()
        Spectrum(freqs, np.full(32, 1.015)).validate()
        with self.assertRaises(InvalidSpectrumError):
            Spectrum(freqs, np.full(32, 1.05)).validate()
        with self.assertRaises(InvalidSpectrumError):
            Spectrum(freqs, np.full(32, -0.01)).validate()

    def test_validate_grid(self):
        with self.assertRaises(InvalidSpectrumError):
            Spectrum([1.0, 3.0, 4.0], [0.5, 0.5, 0.5]).validate()
        with self.assertRaises(InvalidSpectrumError):
            Spectrum([1.0, 2.0], [0.5, 0.5, 0.5])
