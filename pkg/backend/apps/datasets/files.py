"""
MSDS dataset files.

Layout (little-endian throughout):

    magic        4 bytes   b"MSDS"
    version      u16
    class code   u8        0 PLG, 1 PTN, 2 RDN, 3 OTHER
    json length  u32
    solver JSON  UTF-8, canonical SolverConfig JSON
    count        u64
    records      count x 168 bytes

Each record holds the pattern as 32 bytes (256 bits, row-major, most
significant bit first), the generation seed as u64 and the spectrum as
32 float32 values.
"""
import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Sequence, Union

import numpy as np

from apps.patterns.pattern import GRID_SIZE, Pattern, PatternClass
from apps.solver.config import SolverConfig
from apps.solver.spectrum import Spectrum
from utils.error_handling import CorruptHeader, InvalidConfigError, TruncatedRecords, VersionMismatch

logger = logging.getLogger(__name__)

MAGIC = b'MSDS'
FORMAT_VERSION = 1
N_BINS = 32

RECORD_DTYPE = np.dtype([
    ('pattern', 'u1', (GRID_SIZE * GRID_SIZE // 8,)),
    ('seed', '<u8'),
    ('spectrum', '<f4', (N_BINS,)),
])
RECORD_SIZE = RECORD_DTYPE.itemsize  # 168

_PREFIX = struct.Struct('<4sHBI')
_COUNT = struct.Struct('<Q')

CLASS_CODES = {
    PatternClass.PLG: 0,
    PatternClass.PTN: 1,
    PatternClass.RDN: 2,
    PatternClass.OTHER: 3,
}
CLASS_TAGS = {code: tag for tag, code in CLASS_CODES.items()}


def pack_pattern(p: Pattern) -> np.ndarray:
    return np.packbits(p.cells.reshape(-1), bitorder='big')


def empty_records(n: int) -> np.ndarray:
    return np.zeros(n, dtype=RECORD_DTYPE)


@dataclass
class Sample:
    """One dataset entry: a pattern, its ground-truth spectrum and provenance."""
    pattern: Pattern
    spectrum: Spectrum
    gen_seed: int
    solver_fingerprint: str


@dataclass
class DatasetFile:
    """
    In-memory MSDS dataset.

    Attributes:
        class_tag: Pattern class of every sample
        solver: Solver configuration the spectra were computed with
        records: Structured array with RECORD_DTYPE
    """
    class_tag: PatternClass
    solver: SolverConfig
    records: np.ndarray

    def __post_init__(self):
        self.class_tag = PatternClass(self.class_tag)
        if self.records.dtype != RECORD_DTYPE:
            raise InvalidConfigError(f"records must use the MSDS record dtype, got {self.records.dtype}")
        if self.solver.n_freq != N_BINS:
            raise InvalidConfigError(f"MSDS files hold {N_BINS}-bin spectra, solver has n_freq={self.solver.n_freq}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self.sample(i)

    @property
    def freqs(self) -> np.ndarray:
        return self.solver.freqs()

    @property
    def solver_fingerprint(self) -> str:
        return self.solver.fingerprint()

    def patterns(self) -> np.ndarray:
        """(N, 16, 16) uint8 cells of every sample."""
        bits = np.unpackbits(self.records['pattern'], axis=1, bitorder='big')
        return bits.reshape(len(self), GRID_SIZE, GRID_SIZE)

    def inputs(self) -> np.ndarray:
        """(N, 1, 16, 16) float64 network inputs in the {-1, +1} encoding."""
        return 2.0 * self.patterns()[:, None].astype(np.float64) - 1.0

    def flat_patterns(self) -> np.ndarray:
        """(N, 256) float64 flattened patterns for the forest baseline."""
        return self.patterns().reshape(len(self), -1).astype(np.float64)

    def spectra(self) -> np.ndarray:
        """(N, 32) float64 ground-truth spectra."""
        return self.records['spectrum'].astype(np.float64)

    def seeds(self) -> np.ndarray:
        return self.records['seed'].copy()

    def sample(self, i: int) -> Sample:
        record = self.records[i]
        cells = np.unpackbits(record['pattern'], bitorder='big').reshape(GRID_SIZE, GRID_SIZE)
        seed = int(record['seed'])
        return Sample(
            pattern=Pattern(cells, class_tag=self.class_tag, seed=seed),
            spectrum=Spectrum(self.freqs, record['spectrum'].astype(np.float64)),
            gen_seed=seed,
            solver_fingerprint=self.solver_fingerprint,
        )

    def subset(self, indices: Sequence[int]) -> 'DatasetFile':
        return DatasetFile(self.class_tag, self.solver, self.records[np.asarray(indices, dtype=np.int64)].copy())

    # serialization

    def header_bytes(self) -> bytes:
        solver_json = self.solver.canonical_json().encode('utf-8')
        prefix = _PREFIX.pack(MAGIC, FORMAT_VERSION, CLASS_CODES[self.class_tag], len(solver_json))
        return prefix + solver_json + _COUNT.pack(len(self))

    def to_bytes(self) -> bytes:
        return self.header_bytes() + self.records.tobytes()

    def fingerprint(self) -> str:
        """sha256 of the file bytes."""
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def header_info(self) -> dict:
        return {
            'magic': MAGIC.decode('ascii'),
            'version': FORMAT_VERSION,
            'class_tag': self.class_tag.value,
            'count': len(self),
            'record_size': RECORD_SIZE,
            'solver': self.solver.to_dict(),
            'solver_fingerprint': self.solver_fingerprint,
        }

    @classmethod
    def from_bytes(cls, data: bytes) -> 'DatasetFile':
        """
        Parse MSDS bytes.

        Raises:
            CorruptHeader: Wrong magic, unreadable header or trailing bytes
            VersionMismatch: Unsupported format version
            TruncatedRecords: Fewer record bytes than the header announces
        """
        if len(data) < _PREFIX.size:
            raise CorruptHeader(f"file is {len(data)} bytes, shorter than the header")
        magic, version, class_code, json_length = _PREFIX.unpack_from(data, 0)
        if magic != MAGIC:
            raise CorruptHeader(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"format version {version}, this build reads version {FORMAT_VERSION}")
        if class_code not in CLASS_TAGS:
            raise CorruptHeader(f"unknown class code {class_code}")

        offset = _PREFIX.size
        if len(data) < offset + json_length + _COUNT.size:
            raise CorruptHeader("header ends early")
        try:
            solver = SolverConfig.from_dict(json.loads(data[offset:offset + json_length].decode('utf-8')))
        except (UnicodeDecodeError, json.JSONDecodeError, InvalidConfigError, TypeError) as e:
            raise CorruptHeader(f"unreadable solver configuration: {e}") from e
        offset += json_length
        (count,) = _COUNT.unpack_from(data, offset)
        offset += _COUNT.size

        body = len(data) - offset
        complete = body // RECORD_SIZE
        if complete < count:
            raise TruncatedRecords(complete, count)
        if body != count * RECORD_SIZE:
            raise CorruptHeader(f"{body - count * RECORD_SIZE} bytes after the last record")
        records = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=offset).copy()
        return cls(CLASS_TAGS[class_code], solver, records)


def save(ds: DatasetFile, path: Union[str, Path]) -> str:
    """Write a dataset and return its fingerprint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = ds.to_bytes()
    with open(path, 'wb') as handle:
        handle.write(data)
    logger.info(f"Wrote {len(ds)} {ds.class_tag.value} samples to {path}")
    return hashlib.sha256(data).hexdigest()


def load(path: Union[str, Path]) -> DatasetFile:
    try:
        with open(path, 'rb') as handle:
            data = handle.read()
    except FileNotFoundError as e:
        raise InvalidConfigError(f"dataset file not found: {path}") from e
    ds = DatasetFile.from_bytes(data)
    logger.debug(f"Loaded {len(ds)} samples from {path}")
    return ds


def check_compatible(datasets: List[DatasetFile]):
    """All datasets must share one solver configuration."""
    fingerprints = {ds.solver_fingerprint for ds in datasets}
    if len(fingerprints) > 1:
        raise InvalidConfigError("datasets were computed with different solver configurations")
