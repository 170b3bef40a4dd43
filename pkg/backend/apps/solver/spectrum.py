"""
The Spectrum type and its CSV form.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from utils.error_handling import InvalidSpectrumError

CSV_HEADER = 'freq_hz,copr'
OVERSHOOT_TOLERANCE = 0.02


@dataclass(eq=False)
class Spectrum:
    """
    Co-polarized reflectance sampled on a uniform frequency grid.

    Values are stored as computed; range checks happen in validate().
    """
    freqs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=np.float64).copy()
        self.values = np.asarray(self.values, dtype=np.float64).copy()
        if self.freqs.ndim != 1 or self.freqs.shape != self.values.shape:
            raise InvalidSpectrumError(
                f"freqs {self.freqs.shape} and values {self.values.shape} must be equal-length vectors"
            )

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Spectrum):
            return NotImplemented
        return np.array_equal(self.freqs, other.freqs) and np.array_equal(self.values, other.values)

    __hash__ = None

    def validate(self, tol: float = OVERSHOOT_TOLERANCE) -> 'Spectrum':
        """
        Check the grid and the value range [0, 1 + tol].

        Raises:
            InvalidSpectrumError: If the grid is not strictly increasing and
                uniform or a value is out of range
        """
        if len(self.freqs) > 1:
            steps = np.diff(self.freqs)
            if not (steps > 0).all():
                raise InvalidSpectrumError("frequencies must be strictly increasing")
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
                raise InvalidSpectrumError("frequencies must be uniformly spaced")
        if not np.isfinite(self.values).all():
            raise InvalidSpectrumError("spectrum contains non-finite values")
        if self.values.min() < 0.0 or self.values.max() > 1.0 + tol:
            raise InvalidSpectrumError(
                f"values must lie in [0, {1.0 + tol}], got [{self.values.min()}, {self.values.max()}]"
            )
        return self

    def same_grid(self, other: 'Spectrum') -> bool:
        return self.freqs.shape == other.freqs.shape and np.allclose(self.freqs, other.freqs, rtol=1e-9, atol=0.0)

    def to_csv(self, path: Union[str, Path]) -> None:
        """Write `freq_hz,copr` rows with round-trippable float64 decimals."""
        np.savetxt(path, np.column_stack([self.freqs, self.values]), delimiter=',',
                   fmt='%.17g', header=CSV_HEADER, comments='')

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> 'Spectrum':
        """
        Read a spectrum CSV.

        Raises:
            InvalidSpectrumError: If the header or the columns are wrong
        """
        with open(path, 'r', encoding='utf-8') as handle:
            header = handle.readline().strip()
        if header != CSV_HEADER:
            raise InvalidSpectrumError(f"{path}: expected header {CSV_HEADER!r}, got {header!r}")
        try:
            data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
        except ValueError as e:
            raise InvalidSpectrumError(f"{path}: {e}") from e
        if data.shape[1] != 2:
            raise InvalidSpectrumError(f"{path}: expected 2 columns, got {data.shape[1]}")
        return cls(data[:, 0], data[:, 1])
