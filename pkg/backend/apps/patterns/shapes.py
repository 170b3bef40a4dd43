"""
Basic shapes for PTN patterns.

Each shape is a fixed set of (row, col) offsets from its anchor, the top-left
corner of its bounding box. Rows grow downwards. Triangles are a three-cell
base plus an apex cell; the suffix names the direction the apex points to.
"""
from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Tuple

import numpy as np
from django.db import models
from django.utils.translation import gettext_lazy as _


class ShapeName(models.TextChoices):
    SQUARE = 'Square', _('Square')
    CROSS = 'Cross', _('Cross')
    TRIANGLE_N = 'TriangleN', _('Triangle (north)')
    TRIANGLE_E = 'TriangleE', _('Triangle (east)')
    TRIANGLE_S = 'TriangleS', _('Triangle (south)')
    TRIANGLE_W = 'TriangleW', _('Triangle (west)')
    U_SHAPE = 'UShape', _('U-shape')
    H_SHAPE = 'HShape', _('H-shape')


Offsets = Tuple[Tuple[int, int], ...]


@dataclass(frozen=True)
class BasicShape:
    """A named set of cell offsets."""
    name: str
    cells: Offsets

    @property
    def height(self) -> int:
        return max(r for r, _ in self.cells) + 1

    @property
    def width(self) -> int:
        return max(c for _, c in self.cells) + 1

    @property
    def pixel_count(self) -> int:
        return len(self.cells)

    def mask(self) -> np.ndarray:
        """Bounding-box mask of the shape as a uint8 array."""
        out = np.zeros((self.height, self.width), dtype=np.uint8)
        rows, cols = zip(*self.cells)
        out[list(rows), list(cols)] = 1
        return out


SHAPES: Dict[str, BasicShape] = {
    ShapeName.SQUARE: BasicShape(
        ShapeName.SQUARE,
        tuple((r, c) for r in range(3) for c in range(3)),
    ),
    ShapeName.CROSS: BasicShape(
        ShapeName.CROSS, ((0, 1), (1, 0), (1, 1), (1, 2), (2, 1)),
    ),
    ShapeName.TRIANGLE_N: BasicShape(
        ShapeName.TRIANGLE_N, ((0, 1), (1, 0), (1, 1), (1, 2)),
    ),
    ShapeName.TRIANGLE_E: BasicShape(
        ShapeName.TRIANGLE_E, ((0, 0), (1, 0), (1, 1), (2, 0)),
    ),
    ShapeName.TRIANGLE_S: BasicShape(
        ShapeName.TRIANGLE_S, ((0, 0), (0, 1), (0, 2), (1, 1)),
    ),
    ShapeName.TRIANGLE_W: BasicShape(
        ShapeName.TRIANGLE_W, ((0, 1), (1, 0), (1, 1), (2, 1)),
    ),
    # Open at the top
    ShapeName.U_SHAPE: BasicShape(
        ShapeName.U_SHAPE, ((0, 0), (0, 2), (1, 0), (1, 1), (1, 2)),
    ),
    ShapeName.H_SHAPE: BasicShape(
        ShapeName.H_SHAPE,
        ((0, 0), (1, 0), (2, 0), (1, 1), (0, 2), (1, 2), (2, 2)),
    ),
}

# Draw order for uniform shape selection; part of the determinism contract.
SHAPE_ORDER: Tuple[str, ...] = tuple(ShapeName.values)

_BY_OFFSETS: Dict[FrozenSet[Tuple[int, int]], str] = {
    frozenset(shape.cells): name for name, shape in SHAPES.items()
}


def shape_for_offsets(offsets) -> Optional[str]:
    """
    Look up the catalog shape with exactly these offsets.

    Args:
        offsets: Iterable of (row, col) offsets, already normalized to a
            top-left anchor

    Returns:
        str: Shape name, or None if the offsets match no catalog shape
    """
    return _BY_OFFSETS.get(frozenset((int(r), int(c)) for r, c in offsets))
