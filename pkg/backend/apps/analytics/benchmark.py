"""
Cross-benchmarking of fitted predictors over test sets of every pattern
class, the dataset scaling study and prediction-vs-truth bin statistics.
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np

from apps.datasets.files import DatasetFile
from apps.forward.networks import SpectrumPredictor
from apps.forward.training import evaluate
from utils.error_handling import EmptyInputError, GridMismatch, InvalidConfigError

from .statistics import BinStats, bin_stats_array

logger = logging.getLogger(__name__)

RFR = 'RFR'


@dataclass
class BenchRow:
    """
    One fitted model of the matrix.

    Attributes:
        name: Row label, unique within a matrix
        arch: Forward architecture or RFR
        train: Key of the training dataset
        domain: Pattern class of the training data
        predictor: Fitted model
    """
    name: str
    arch: str
    train: str
    domain: str
    predictor: SpectrumPredictor

    @property
    def is_network(self) -> bool:
        return self.arch != RFR


@dataclass
class CrossBenchMatrix:
    """Mean test MSE of every row on every test set."""
    rows: List[str]
    archs: List[str]
    domains: List[str]
    cols: List[str]
    col_domains: List[str]
    values: np.ndarray

    def entry(self, row: str, col: str) -> float:
        return float(self.values[self.rows.index(row), self.cols.index(col)])

    def column_minima(self) -> Dict[str, str]:
        """Column -> row name with the lowest MSE."""
        return {col: self.rows[int(np.argmin(self.values[:, j]))] for j, col in enumerate(self.cols)}

    def diagonal_check(self) -> Dict[str, Dict[str, Any]]:
        """
        For every row whose training class has a test column: whether the
        in-domain entry is the row minimum.
        """
        checks = {}
        for i, name in enumerate(self.rows):
            if self.domains[i] not in self.col_domains:
                continue
            j = self.col_domains.index(self.domains[i])
            checks[name] = {
                'arch': self.archs[i],
                'in_domain': self.cols[j],
                'in_domain_mse': float(self.values[i, j]),
                'is_row_min': bool(self.values[i, j] <= self.values[i].min()),
            }
        return checks

    def trend_passes(self, min_rows: int = 2) -> bool:
        """At least min_rows network rows have their in-domain entry as row minimum."""
        network_rows = [c for c in self.diagonal_check().values() if c['arch'] != RFR]
        return sum(c['is_row_min'] for c in network_rows) >= min(min_rows, len(network_rows))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'cols': self.cols,
            'rows': [
                {'name': name, 'arch': arch, 'domain': domain, 'mse': dict(zip(self.cols, self.values[i].tolist()))}
                for i, (name, arch, domain) in enumerate(zip(self.rows, self.archs, self.domains))
            ],
            'column_minima': self.column_minima(),
            'diagonal': self.diagonal_check(),
        }

    def to_csv(self, path: Union[str, Path]):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['model', 'arch', 'train_class'] + self.cols)
            for i, name in enumerate(self.rows):
                writer.writerow([name, self.archs[i], self.domains[i]] + [repr(float(v)) for v in self.values[i]])

    def to_markdown(self) -> str:
        """Table with the per-column minimum in bold."""
        minima = self.column_minima()
        lines = ['| Model | ' + ' | '.join(self.cols) + ' |', '|---' * (len(self.cols) + 1) + '|']
        for i, name in enumerate(self.rows):
            cells = []
            for j, col in enumerate(self.cols):
                text = f"{self.values[i, j]:.6f}"
                cells.append(f"**{text}**" if minima[col] == name else text)
            lines.append(f"| {name} | " + ' | '.join(cells) + ' |')
        return '\n'.join(lines) + '\n'


def _check_shared_grid(testsets: Dict[str, DatasetFile]):
    sets = list(testsets.values())
    reference = sets[0].freqs
    for ds in sets[1:]:
        if len(ds.freqs) != len(reference) or not np.allclose(ds.freqs, reference, rtol=1e-9):
            raise GridMismatch("cross-benchmark test sets use different frequency grids")
    if len({ds.solver_fingerprint for ds in sets}) > 1:
        logger.warning("Test sets come from different solver configurations")


def cross_benchmark(models: Sequence[BenchRow], testsets: Dict[str, DatasetFile]) -> CrossBenchMatrix:
    """
    Mean test MSE of every model on every test set.

    Solver-fingerprint differences only log warnings; a frequency grid
    mismatch is fatal.

    Raises:
        EmptyInputError: If there are no models or no test sets
        InvalidConfigError: If row names repeat
        GridMismatch: If test sets or models use different frequency grids
    """
    if not models or not testsets:
        raise EmptyInputError("cross-benchmark needs at least one model and one test set")
    names = [row.name for row in models]
    if len(set(names)) != len(names):
        raise InvalidConfigError("cross-benchmark row names must be unique")
    _check_shared_grid(testsets)

    cols = list(testsets)
    values = np.zeros((len(models), len(cols)))
    for i, row in enumerate(models):
        for j, key in enumerate(cols):
            values[i, j] = evaluate(row.predictor, testsets[key]).mean
            logger.info(f"{row.name} on {key}: {values[i, j]:.3e}")
    return CrossBenchMatrix(
        rows=names,
        archs=[row.arch for row in models],
        domains=[str(row.domain) for row in models],
        cols=cols,
        col_domains=[testsets[key].class_tag.value for key in cols],
        values=values,
    )


@dataclass
class ScalingTable:
    """
    Test MSE per training-set size.

    Attributes:
        sizes: Training sizes, increasing
        cols: Test-set keys
        values: (len(sizes), len(cols)) mean test MSE
        in_domain: Column matching the pool's pattern class, if any
    """
    sizes: List[int]
    cols: List[str]
    values: np.ndarray
    in_domain: Optional[str] = None
    train_mse: List[float] = field(default_factory=list)

    @property
    def non_increasing(self) -> Optional[bool]:
        """In-domain MSE of the largest size is at most that of the smallest."""
        if self.in_domain is None:
            return None
        column = self.values[:, self.cols.index(self.in_domain)]
        return bool(column[-1] <= column[0])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sizes': self.sizes,
            'cols': self.cols,
            'mse': [dict(zip(self.cols, row.tolist())) for row in self.values],
            'in_domain': self.in_domain,
            'non_increasing': self.non_increasing,
        }

    def to_csv(self, path: Union[str, Path]):
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['size'] + self.cols)
            for size, row in zip(self.sizes, self.values):
                writer.writerow([size] + [repr(float(v)) for v in row])


def scaling_study(pool: DatasetFile, sizes: Sequence[int], fit: Callable[[DatasetFile], SpectrumPredictor],
                  testsets: Dict[str, DatasetFile]) -> ScalingTable:
    """
    Fit on growing prefixes of one training pool and score every test set.

    Args:
        pool: Training pool; size n uses its first n samples
        sizes: Training sizes, strictly increasing and at most len(pool)
        fit: Fits a predictor on a training set
        testsets: Test sets by key

    Raises:
        InvalidConfigError: If sizes are empty, not increasing or exceed the pool
        EmptyInputError: If there are no test sets
    """
    sizes = [int(s) for s in sizes]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])) or sizes[0] < 1:
        raise InvalidConfigError(f"scaling sizes must be positive and increasing, got {sizes}")
    if sizes[-1] > len(pool):
        raise InvalidConfigError(f"scaling size {sizes[-1]} exceeds the pool of {len(pool)} samples")
    if not testsets:
        raise EmptyInputError("scaling study needs at least one test set")
    _check_shared_grid(testsets)

    cols = list(testsets)
    values = np.zeros((len(sizes), len(cols)))
    train_mse = []
    for i, size in enumerate(sizes):
        subset = pool.subset(np.arange(size))
        predictor = fit(subset)
        train_mse.append(evaluate(predictor, subset).mean)
        for j, key in enumerate(cols):
            values[i, j] = evaluate(predictor, testsets[key]).mean
        logger.info(f"size {size}: " + ', '.join(f"{k} {v:.3e}" for k, v in zip(cols, values[i])))

    domain = pool.class_tag.value
    in_domain = next((key for key in cols if testsets[key].class_tag.value == domain), None)
    table = ScalingTable(sizes=sizes, cols=cols, values=values, in_domain=in_domain, train_mse=train_mse)
    if table.non_increasing is False:
        logger.warning(f"In-domain MSE grew from {sizes[0]} to {sizes[-1]} training samples")
    return table


def prediction_stats(predictor: SpectrumPredictor, ds: DatasetFile) -> Dict[str, BinStats]:
    """Bin statistics of the ground truth and of a model's predictions on the same patterns."""
    return {
        'truth': bin_stats_array(ds.freqs, ds.spectra()),
        'predicted': bin_stats_array(ds.freqs, predictor.predict_batch(ds.patterns())),
    }
