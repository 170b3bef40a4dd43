"""
Per-frequency-bin distribution statistics and error histograms.

All bin statistics are computed on x = 1 - coPR with population moments.
Kurtosis follows the Pearson convention (m4 / m2^2, 3 for a normal
distribution) and is reported as absent (NaN in arrays, empty in CSV) when the
variance is below VARIANCE_FLOOR.
"""
import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from apps.solver.spectrum import Spectrum
from utils.error_handling import EmptyInputError, GridMismatch

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-12
ERROR_FLOOR = 1e-12
BIN_STATS_HEADER = ['freq_hz', 'mean', 'variance', 'kurtosis']


@dataclass
class BinStats:
    """
    Moments of 1 - coPR per frequency bin.

    Attributes:
        freqs: Bin frequencies in Hz
        mean: Mean per bin
        variance: Population variance per bin
        kurtosis: Pearson kurtosis per bin, NaN where absent
        count: Number of spectra
    """
    freqs: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    kurtosis: np.ndarray
    count: int

    def to_dict(self) -> dict:
        return {
            'count': self.count,
            'freq_hz': self.freqs.tolist(),
            'mean': self.mean.tolist(),
            'variance': self.variance.tolist(),
            'kurtosis': [None if np.isnan(k) else float(k) for k in self.kurtosis],
        }

    def to_csv(self, path: Union[str, Path]):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(BIN_STATS_HEADER)
            for f, m, v, k in zip(self.freqs, self.mean, self.variance, self.kurtosis):
                writer.writerow([repr(float(f)), repr(float(m)), repr(float(v)), '' if np.isnan(k) else repr(float(k))])


def bin_stats_array(freqs: np.ndarray, values: np.ndarray) -> BinStats:
    """
    bin_stats over an (N, n_bins) array of coPR values.

    Raises:
        EmptyInputError: If fewer than 2 spectra are given
        GridMismatch: If the value columns do not match the grid
    """
    values = np.asarray(values, dtype=np.float64)
    freqs = np.asarray(freqs, dtype=np.float64)
    if values.ndim != 2 or len(values) < 2:
        raise EmptyInputError(f"bin statistics need at least 2 spectra, got {len(values)}")
    if values.shape[1] != len(freqs):
        raise GridMismatch(f"{values.shape[1]} bins per spectrum for a {len(freqs)}-point grid")
    if len(values) < 4:
        logger.warning(f"Kurtosis over only {len(values)} spectra is unreliable")

    x = 1.0 - values
    mean = x.mean(axis=0)
    centered = x - mean
    m2 = np.mean(centered ** 2, axis=0)
    m4 = np.mean(centered ** 4, axis=0)
    kurtosis = np.full_like(m2, np.nan)
    defined = m2 >= VARIANCE_FLOOR
    kurtosis[defined] = m4[defined] / m2[defined] ** 2
    return BinStats(freqs=freqs.copy(), mean=mean, variance=m2, kurtosis=kurtosis, count=len(values))


def bin_stats(spectra: Sequence[Spectrum]) -> BinStats:
    """
    Mean, population variance and Pearson kurtosis of 1 - coPR per bin.

    Raises:
        EmptyInputError: If fewer than 2 spectra are given
        GridMismatch: If the spectra use different frequency grids
    """
    spectra = list(spectra)
    if len(spectra) < 2:
        raise EmptyInputError(f"bin statistics need at least 2 spectra, got {len(spectra)}")
    reference = spectra[0]
    for s in spectra[1:]:
        if not reference.same_grid(s):
            raise GridMismatch("spectra use different frequency grids")
    return bin_stats_array(reference.freqs, np.stack([s.values for s in spectra]))


@dataclass
class Histogram:
    """Counts over log10-spaced bins, divided by the largest count."""
    edges: np.ndarray
    heights: np.ndarray
    counts: np.ndarray

    def to_dict(self) -> dict:
        return {'edges': self.edges.tolist(), 'heights': self.heights.tolist(), 'counts': self.counts.tolist()}


def error_histogram(errors: Sequence[float], n_bins: int = 30) -> Histogram:
    """
    Normalized histogram of per-sample errors on a log axis.

    Errors below ERROR_FLOOR (including exact zeros) are counted at the floor.
    A set of identical errors gives one bin of height 1.

    Raises:
        EmptyInputError: If no errors are given
    """
    errors = np.asarray(errors, dtype=np.float64).reshape(-1)
    if errors.size == 0:
        raise EmptyInputError("no errors to histogram")
    if np.any(errors < 0) or not np.all(np.isfinite(errors)):
        raise EmptyInputError("errors must be finite and non-negative")

    logs = np.log10(np.maximum(errors, ERROR_FLOOR))
    lo, hi = logs.min(), logs.max()
    if hi - lo < 1e-12:
        log_edges = np.array([lo - 0.05, hi + 0.05])
    else:
        log_edges = np.linspace(lo, hi, n_bins + 1)
    counts, _ = np.histogram(logs, bins=log_edges)
    return Histogram(edges=10.0 ** log_edges, heights=counts / counts.max(), counts=counts)
