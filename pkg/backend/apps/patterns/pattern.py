"""
The Pattern type.

A pattern is the design variable of the pipeline: a 16x16 grid of copper
patches (1) and gaps (0), tagged with the class it was generated as.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

import numpy as np
from django.db import models
from django.utils.translation import gettext_lazy as _
from scipy import ndimage

from utils.error_handling import InvalidPatternError

from .shapes import SHAPES

GRID_SIZE = 16
N_CELLS = GRID_SIZE * GRID_SIZE

# 4-connectivity
_STRUCTURE_4 = ndimage.generate_binary_structure(2, 1)


class PatternClass(models.TextChoices):
    PLG = 'PLG', _('Connected polygon')
    PTN = 'PTN', _('Basic-shape combination')
    RDN = 'RDN', _('Unconstrained random')
    OTHER = 'OTHER', _('Other')


@dataclass(frozen=True)
class Placement:
    """A basic shape placed with its bounding box top-left corner at (row, col)."""
    shape: str
    row: int
    col: int

    def cells(self) -> List[Tuple[int, int]]:
        return [(self.row + dr, self.col + dc) for dr, dc in SHAPES[self.shape].cells]

    def to_dict(self) -> Dict[str, object]:
        return {'shape': str(self.shape), 'row': self.row, 'col': self.col}


@dataclass(eq=False)
class Pattern:
    """
    16x16 binary occupancy grid.

    Attributes:
        cells: uint8 array of shape (16, 16), read-only
        class_tag: One of PatternClass
        seed: Seed the pattern was generated from (0 if external)
        placements: Shapes recorded by the PTN generator, empty otherwise
    """
    cells: np.ndarray
    class_tag: str = PatternClass.OTHER
    seed: int = 0
    placements: Tuple[Placement, ...] = field(default_factory=tuple)

    def __post_init__(self):
        grid = np.asarray(self.cells)
        if grid.shape != (GRID_SIZE, GRID_SIZE):
            raise InvalidPatternError(
                f"pattern must be {GRID_SIZE}x{GRID_SIZE}, got shape {grid.shape}"
            )
        if not np.isin(grid, (0, 1)).all():
            raise InvalidPatternError("pattern cells must be 0 or 1")
        if self.class_tag not in PatternClass.values:
            raise InvalidPatternError(f"unknown pattern class {self.class_tag!r}")
        grid = grid.astype(np.uint8, copy=True)
        grid.flags.writeable = False
        self.cells = grid
        self.class_tag = PatternClass(self.class_tag)
        self.placements = tuple(self.placements)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pattern):
            return NotImplemented
        return self.class_tag == other.class_tag and np.array_equal(self.cells, other.cells)

    __hash__ = None

    def __repr__(self) -> str:
        return f"Pattern(class_tag={self.class_tag.value}, seed={self.seed}, ones={self.ones})"

    @property
    def ones(self) -> int:
        return int(self.cells.sum())

    @property
    def fill_fraction(self) -> float:
        return self.ones / N_CELLS

    def encoded(self) -> np.ndarray:
        """Network input encoding {0,1} -> {-1,+1} as float64."""
        return 2.0 * self.cells.astype(np.float64) - 1.0

    def to_text(self) -> str:
        """16 lines of '0'/'1', newline-terminated."""
        return ''.join(''.join(str(v) for v in row) + '\n' for row in self.cells)

    @classmethod
    def from_text(cls, text: str, class_tag: str = PatternClass.OTHER, seed: int = 0) -> 'Pattern':
        """
        Parse the 16-line debug format.

        Args:
            text: Pattern text; blank lines and surrounding whitespace are ignored
            class_tag: Tag to attach to the parsed pattern
            seed: Seed to attach to the parsed pattern

        Returns:
            Pattern: The parsed pattern

        Raises:
            InvalidPatternError: If the text is not 16 rows of 16 binary digits
        """
        rows = [line.strip() for line in text.splitlines() if line.strip()]
        if len(rows) != GRID_SIZE or any(len(r) != GRID_SIZE for r in rows):
            raise InvalidPatternError(
                f"pattern text must have {GRID_SIZE} rows of {GRID_SIZE} characters"
            )
        if any(ch not in '01' for r in rows for ch in r):
            raise InvalidPatternError("pattern text may only contain '0' and '1'")
        grid = np.array([[int(ch) for ch in r] for r in rows], dtype=np.uint8)
        return cls(grid, class_tag=class_tag, seed=seed)

    @classmethod
    def zeros(cls) -> 'Pattern':
        return cls(np.zeros((GRID_SIZE, GRID_SIZE), dtype=np.uint8))

    @classmethod
    def full(cls) -> 'Pattern':
        return cls(np.ones((GRID_SIZE, GRID_SIZE), dtype=np.uint8))

    @classmethod
    def from_placements(cls, placements: Iterable[Placement], seed: int = 0) -> 'Pattern':
        """Rasterize PTN placements; overlapping placements are rejected."""
        placements = tuple(placements)
        grid = np.zeros((GRID_SIZE, GRID_SIZE), dtype=np.uint8)
        for placement in placements:
            for r, c in placement.cells():
                if not (0 <= r < GRID_SIZE and 0 <= c < GRID_SIZE):
                    raise InvalidPatternError(f"{placement} leaves the grid")
                if grid[r, c]:
                    raise InvalidPatternError(f"{placement} overlaps another shape")
                grid[r, c] = 1
        return cls(grid, class_tag=PatternClass.PTN, seed=seed, placements=placements)


def is_connected(p: Pattern) -> bool:
    """
    True iff the 1-cells form exactly one 4-connected component.

    The empty pattern is not connected.
    """
    _, n_components = ndimage.label(p.cells, structure=_STRUCTURE_4)
    return n_components == 1


def label_components(cells: np.ndarray) -> Tuple[np.ndarray, int]:
    """4-connected component labelling of a binary grid."""
    return ndimage.label(cells, structure=_STRUCTURE_4)
