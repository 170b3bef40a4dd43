"""
Solver configuration.

All lengths are in metres and frequencies in Hz. The JSON form stores the
complex substrate permittivity as [real, imag]; a positive imaginary part
means loss.
"""
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from utils.error_handling import InvalidSolverConfig

C0 = 299792458.0
MU0 = 4e-7 * math.pi
EPS0 = 1.0 / (MU0 * C0 ** 2)
ETA0 = MU0 * C0

N_PATCHES = 16

# Steps must divide lengths to this relative precision
_GRID_TOLERANCE = 1e-6


def _cells(length: float, step: float) -> int:
    return int(round(length / step))


def _divides(length: float, step: float) -> bool:
    ratio = length / step
    return round(ratio) >= 1 and abs(ratio - round(ratio)) < _GRID_TOLERANCE


@dataclass(frozen=True)
class SolverConfig:
    """
    Geometry, materials, grid, band and run controls of the unit-cell solver.

    The unit cell is a 16x16 grid of square patches of side patch_pitch with a
    copper-free pad around it, on a PEC-backed substrate, with air and an
    absorbing layer above.
    """
    patch_pitch: float = 0.5e-3
    patch_thickness: float = 0.018e-3
    pad: float = 1.0e-3
    substrate_eps_r: complex = complex(2.65, 2.65 * 0.003)
    substrate_mu_r: float = 1.0
    substrate_thickness: float = 3.0e-3
    backplate_thickness: float = 0.18e-3
    lateral_step: float = 0.25e-3
    vertical_step: float = 0.25e-3
    air_height: float = 10.0e-3
    absorber_cells: int = 10
    courant_factor: float = 0.99
    band_lo: float = 2.0e9
    band_hi: float = 12.0e9
    n_freq: int = 32
    max_steps: int = 40000
    decay_db: float = -60.0
    source_amplitude: float = 1.0

    @property
    def cell_size(self) -> float:
        return N_PATCHES * self.patch_pitch + 2.0 * self.pad

    @property
    def lossless_substrate(self) -> bool:
        return complex(self.substrate_eps_r).imag == 0.0

    def freqs(self) -> np.ndarray:
        """The spectrum frequency grid, inclusive endpoints."""
        return np.linspace(self.band_lo, self.band_hi, self.n_freq)

    # grid geometry in cells

    @property
    def nx(self) -> int:
        return _cells(self.cell_size, self.lateral_step)

    @property
    def pitch_cells(self) -> int:
        return _cells(self.patch_pitch, self.lateral_step)

    @property
    def pad_cells(self) -> int:
        return _cells(self.pad, self.lateral_step)

    @property
    def substrate_cells(self) -> int:
        return _cells(self.substrate_thickness, self.vertical_step)

    @property
    def air_cells(self) -> int:
        return _cells(self.air_height, self.vertical_step)

    def time_step(self) -> float:
        """Courant-limited time step of the 3-D grid."""
        dx = dy = self.lateral_step
        dz = self.vertical_step
        return self.courant_factor / (C0 * math.sqrt(1.0 / dx ** 2 + 1.0 / dy ** 2 + 1.0 / dz ** 2))

    def validate(self) -> 'SolverConfig':
        """
        Check the configuration invariants.

        Returns:
            SolverConfig: self, for chaining

        Raises:
            InvalidSolverConfig: On the first violated invariant
        """
        positive = ('patch_pitch', 'pad', 'substrate_thickness', 'lateral_step',
                    'vertical_step', 'air_height', 'band_lo', 'substrate_mu_r')
        for name in positive:
            if not getattr(self, name) > 0:
                raise InvalidSolverConfig(f"{name} must be positive, got {getattr(self, name)}")
        if not _divides(self.patch_pitch, self.lateral_step):
            raise InvalidSolverConfig(
                f"lateral_step {self.lateral_step} does not divide patch_pitch {self.patch_pitch}"
            )
        if not _divides(self.pad, self.lateral_step):
            raise InvalidSolverConfig(
                f"lateral_step {self.lateral_step} does not divide pad {self.pad}"
            )
        if not _divides(self.substrate_thickness, self.vertical_step):
            raise InvalidSolverConfig(
                f"vertical_step {self.vertical_step} does not divide "
                f"substrate_thickness {self.substrate_thickness}"
            )
        if not _divides(self.air_height, self.vertical_step):
            raise InvalidSolverConfig(
                f"vertical_step {self.vertical_step} does not divide air_height {self.air_height}"
            )
        if self.air_cells < 8:
            raise InvalidSolverConfig("air_height must span at least 8 vertical cells")
        if self.n_freq < 1:
            raise InvalidSolverConfig(f"n_freq must be at least 1, got {self.n_freq}")
        if not self.band_lo < self.band_hi:
            raise InvalidSolverConfig(
                f"band_lo {self.band_lo} must be below band_hi {self.band_hi}"
            )
        if not C0 / self.band_hi > self.cell_size:
            raise InvalidSolverConfig(
                f"wavelength at band_hi ({C0 / self.band_hi:.4g} m) must exceed "
                f"cell_size ({self.cell_size:.4g} m) so only the zeroth order propagates"
            )
        eps = complex(self.substrate_eps_r)
        if eps.real < 1.0 or eps.imag < 0.0:
            raise InvalidSolverConfig(
                f"substrate_eps_r needs real part >= 1 and imaginary part >= 0, got {eps}"
            )
        if self.absorber_cells < 4:
            raise InvalidSolverConfig("absorber_cells must be at least 4")
        if not 0.0 < self.courant_factor <= 1.0:
            raise InvalidSolverConfig(f"courant_factor must be in (0, 1], got {self.courant_factor}")
        if self.max_steps < 1:
            raise InvalidSolverConfig("max_steps must be positive")
        if not self.decay_db < 0.0:
            raise InvalidSolverConfig(f"decay_db must be negative, got {self.decay_db}")
        if self.source_amplitude == 0.0:
            raise InvalidSolverConfig("source_amplitude must be non-zero")
        return self

    # presets

    @classmethod
    def for_class(cls, class_tag: str, **overrides) -> 'SolverConfig':
        """Band preset of a pattern class: PLG 9.5-12 GHz, others 2-12 GHz."""
        if class_tag == 'PLG':
            overrides.setdefault('band_lo', 9.5e9)
            overrides.setdefault('band_hi', 12.0e9)
        return cls(**overrides)

    def lossless(self) -> 'SolverConfig':
        """Same configuration with the substrate loss removed."""
        return dataclasses.replace(self, substrate_eps_r=complex(complex(self.substrate_eps_r).real, 0.0))

    def with_steps(self, step: float) -> 'SolverConfig':
        """Same configuration on a grid with the given lateral and vertical step."""
        return dataclasses.replace(self, lateral_step=step, vertical_step=step)

    # serialization

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        eps = complex(self.substrate_eps_r)
        data['substrate_eps_r'] = [eps.real, eps.imag]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SolverConfig':
        """
        Build a configuration from its JSON form, defaults for missing keys.

        Raises:
            InvalidSolverConfig: On unknown keys or malformed values
        """
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise InvalidSolverConfig(f"unknown solver keys: {', '.join(unknown)}")
        kwargs = dict(data)
        if 'substrate_eps_r' in kwargs:
            eps = kwargs['substrate_eps_r']
            if isinstance(eps, (list, tuple)):
                if len(eps) != 2:
                    raise InvalidSolverConfig("substrate_eps_r must be [real, imag]")
                eps = complex(float(eps[0]), float(eps[1]))
            kwargs['substrate_eps_r'] = complex(eps)
        try:
            for name in ('absorber_cells', 'n_freq', 'max_steps'):
                if name in kwargs:
                    kwargs[name] = int(kwargs[name])
            for name, f in known.items():
                if name in kwargs and f.type is float:
                    kwargs[name] = float(kwargs[name])
        except (TypeError, ValueError) as e:
            raise InvalidSolverConfig(f"malformed solver value: {e}") from e
        return cls(**kwargs)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))

    def fingerprint(self) -> str:
        """sha256 of the canonical JSON form."""
        return hashlib.sha256(self.canonical_json().encode('utf-8')).hexdigest()
