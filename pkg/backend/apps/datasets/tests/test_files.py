"""
Tests for the MSDS file format and splits.
"""
import os
import struct
import tempfile

import numpy as np
from django.test import SimpleTestCase

from apps.datasets.builder import build_dataset
from apps.datasets.files import RECORD_SIZE, DatasetFile, load, save
from apps.datasets.splits import split
from apps.patterns.pattern import Pattern
from apps.solver.config import SolverConfig
from apps.solver.spectrum import Spectrum
from utils.error_handling import CorruptHeader, EmptySplit, InvalidConfigError, TruncatedRecords, VersionMismatch


def fill_simulator(p: Pattern, cfg: SolverConfig) -> Spectrum:
    """Cheap stand-in spectrum: a dip whose depth follows the fill fraction."""
    freqs = cfg.freqs()
    x = (freqs - freqs[0]) / (freqs[-1] - freqs[0])
    values = 1.0 - 0.8 * p.fill_fraction * np.exp(-((x - 0.5) / 0.2) ** 2)
    return Spectrum(freqs, values)


def small_dataset(n=6, class_tag='RDN', master_seed=3) -> DatasetFile:
    return build_dataset(class_tag, n, master_seed, SolverConfig(), simulator=fill_simulator)


class RecordLayoutTests(SimpleTestCase):
    """Tests for the byte layout of MSDS files."""

    def test_record_size(self):
        self.assertEqual(RECORD_SIZE, 32 + 8 + 128)

    def test_single_sample_file_size(self):
        ds = small_dataset(n=1)
        solver_json = SolverConfig().canonical_json().encode('utf-8')
        header = 4 + 2 + 1 + 4 + len(solver_json) + 8
        self.assertEqual(len(ds.to_bytes()), header + 168)

    def test_header_fields(self):
        data = small_dataset(n=2, class_tag='PTN').to_bytes()
        magic, version, class_code, json_length = struct.unpack_from('<4sHBI', data, 0)
        self.assertEqual(magic, b'MSDS')
        self.assertEqual(version, 1)
        self.assertEqual(class_code, 1)
        (count,) = struct.unpack_from('<Q', data, 11 + json_length)
        self.assertEqual(count, 2)

    def test_pattern_bits_msb_first(self):
        ds = small_dataset(n=1)
        cells = np.zeros((16, 16), dtype=np.uint8)
        cells[0, 0] = 1
        cells[15, 15] = 1
        ds.records['pattern'][0] = np.packbits(cells.reshape(-1))
        raw = ds.records.tobytes()
        self.assertEqual(raw[0], 0x80)
        self.assertEqual(raw[31], 0x01)
        self.assertTrue(np.array_equal(ds.patterns()[0], cells))

    def test_seed_and_spectrum_little_endian(self):
        ds = small_dataset(n=1)
        raw = ds.records.tobytes()
        self.assertEqual(int.from_bytes(raw[32:40], 'little'), int(ds.records['seed'][0]))
        first = struct.unpack('<f', raw[40:44])[0]
        self.assertEqual(first, float(ds.records['spectrum'][0][0]))

    def test_samples_round_to_float32_once(self):
        ds = small_dataset(n=2)
        sample = ds.sample(1)
        expected = fill_simulator(sample.pattern, SolverConfig()).values
        np.testing.assert_allclose(sample.spectrum.values, expected, rtol=1e-7)
        self.assertEqual(sample.gen_seed, sample.pattern.seed)
        self.assertEqual(sample.solver_fingerprint, SolverConfig().fingerprint())


class RoundTripTests(SimpleTestCase):
    """Tests for save and load."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'ds.msds')

    def tearDown(self):
        self.tmp.cleanup()

    def test_byte_exact(self):
        ds = small_dataset(n=5, class_tag='PLG')
        fingerprint = save(ds, self.path)
        loaded = load(self.path)
        self.assertEqual(loaded.to_bytes(), ds.to_bytes())
        self.assertEqual(loaded.fingerprint(), fingerprint)
        self.assertEqual(loaded.class_tag, 'PLG')
        self.assertEqual(loaded.solver, SolverConfig())
        other = os.path.join(self.tmp.name, 'again.msds')
        save(loaded, other)
        with open(self.path, 'rb') as a, open(other, 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_truncated_records(self):
        data = small_dataset(n=4).to_bytes()
        with open(self.path, 'wb') as handle:
            handle.write(data[:-100])
        with self.assertRaises(TruncatedRecords) as ctx:
            load(self.path)
        self.assertEqual(ctx.exception.index, 3)
        self.assertEqual(ctx.exception.expected, 4)

    def test_wrong_magic(self):
        data = bytearray(small_dataset(n=1).to_bytes())
        data[:4] = b'XXXX'
        with self.assertRaises(CorruptHeader):
            DatasetFile.from_bytes(bytes(data))

    def test_short_file(self):
        with self.assertRaises(CorruptHeader):
            DatasetFile.from_bytes(b'MSD')

    def test_version_mismatch(self):
        data = bytearray(small_dataset(n=1).to_bytes())
        data[4:6] = (2).to_bytes(2, 'little')
        with self.assertRaises(VersionMismatch):
            DatasetFile.from_bytes(bytes(data))

    def test_trailing_bytes(self):
        data = small_dataset(n=1).to_bytes() + b'\x00'
        with self.assertRaises(CorruptHeader):
            DatasetFile.from_bytes(data)

    def test_missing_file(self):
        with self.assertRaises(InvalidConfigError):
            load(os.path.join(self.tmp.name, 'nope.msds'))


class SplitTests(SimpleTestCase):
    """Tests for split."""

    def test_nine_one(self):
        train, test = split(small_dataset(n=10), 0.1, seed=5)
        self.assertEqual((len(train), len(test)), (9, 1))

    def test_partition(self):
        ds = small_dataset(n=20)
        train, test = split(ds, 0.25, seed=1)
        train_seeds = set(train.seeds().tolist())
        test_seeds = set(test.seeds().tolist())
        self.assertFalse(train_seeds & test_seeds)
        self.assertEqual(train_seeds | test_seeds, set(ds.seeds().tolist()))
        self.assertEqual(len(test), 5)

    def test_keeps_sample_order(self):
        ds = small_dataset(n=20)
        train, _ = split(ds, 0.25, seed=1)
        positions = [ds.seeds().tolist().index(s) for s in train.seeds().tolist()]
        self.assertEqual(positions, sorted(positions))

    def test_deterministic(self):
        ds = small_dataset(n=20)
        a, _ = split(ds, 0.3, seed=9)
        b, _ = split(ds, 0.3, seed=9)
        c, _ = split(ds, 0.3, seed=10)
        self.assertEqual(a.to_bytes(), b.to_bytes())
        self.assertNotEqual(a.to_bytes(), c.to_bytes())

    def test_empty_side(self):
        with self.assertRaises(EmptySplit):
            split(small_dataset(n=3), 0.1, seed=0)
        with self.assertRaises(EmptySplit):
            split(small_dataset(n=3), 0.9, seed=0)

    def test_fraction_range(self):
        with self.assertRaises(InvalidConfigError):
            split(small_dataset(n=3), 1.0, seed=0)
