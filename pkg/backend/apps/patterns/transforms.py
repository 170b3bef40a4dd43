"""
Mirror and rotation operations on patterns.

mirror_x reflects across the vertical axis (columns reversed), mirror_y across
the horizontal axis (rows reversed, the axis parallel to the incident
E-field), rot180 does both. Tags follow the class invariants: RDN stays RDN,
PLG stays PLG because flips preserve 4-connectivity, and PTN stays PTN only if
every moved shape is still a catalog shape.
"""
from typing import Callable, Optional, Tuple

import numpy as np

from .pattern import GRID_SIZE, Pattern, PatternClass, Placement
from .shapes import SHAPES, shape_for_offsets


def _move_placement(placement: Placement, flip_rows: bool, flip_cols: bool) -> Optional[Placement]:
    shape = SHAPES[placement.shape]
    h, w = shape.height, shape.width
    offsets = [
        (h - 1 - dr if flip_rows else dr, w - 1 - dc if flip_cols else dc)
        for dr, dc in shape.cells
    ]
    name = shape_for_offsets(offsets)
    if name is None:
        return None
    row = GRID_SIZE - placement.row - h if flip_rows else placement.row
    col = GRID_SIZE - placement.col - w if flip_cols else placement.col
    return Placement(name, row, col)


def _transform(p: Pattern, flip_rows: bool, flip_cols: bool,
               grid_op: Callable[[np.ndarray], np.ndarray]) -> Pattern:
    cells = grid_op(p.cells)
    tag = p.class_tag
    placements: Tuple[Placement, ...] = ()

    if tag == PatternClass.PTN:
        moved = [_move_placement(pl, flip_rows, flip_cols) for pl in p.placements]
        if moved and all(m is not None for m in moved):
            placements = tuple(moved)
        else:
            tag = PatternClass.OTHER

    return Pattern(cells, class_tag=tag, seed=p.seed, placements=placements)


def mirror_x(p: Pattern) -> Pattern:
    """Reflect across the vertical axis."""
    return _transform(p, flip_rows=False, flip_cols=True, grid_op=np.fliplr)


def mirror_y(p: Pattern) -> Pattern:
    """Reflect across the horizontal axis."""
    return _transform(p, flip_rows=True, flip_cols=False, grid_op=np.flipud)


def rot180(p: Pattern) -> Pattern:
    """Rotate by 180 degrees."""
    return _transform(p, flip_rows=True, flip_cols=True,
                      grid_op=lambda g: np.flipud(np.fliplr(g)))
