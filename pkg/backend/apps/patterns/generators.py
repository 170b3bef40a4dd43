"""
Procedural generators for the three pattern classes.

All generators are pure functions of (seed, params). Randomness comes from a
PCG64 generator seeded with the 64-bit seed, so identical inputs give
identical patterns on every platform.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from matplotlib.path import Path as PolygonPath

from utils.error_handling import (
    GenerationRetryExhausted,
    InvalidConfigError,
    PlacementExhausted,
)

from .pattern import GRID_SIZE, N_CELLS, Pattern, PatternClass, Placement, label_components
from .shapes import SHAPE_ORDER, SHAPES

logger = logging.getLogger(__name__)

SEED_LIMIT = 2 ** 64

PLG_MAX_ATTEMPTS = 100
PTN_MAX_REJECTIONS = 1000

# Cell centres in (x, y) = (col + 0.5, row + 0.5)
_ROWS, _COLS = np.mgrid[0:GRID_SIZE, 0:GRID_SIZE]
_CENTRES = np.column_stack([_COLS.ravel() + 0.5, _ROWS.ravel() + 0.5])


@dataclass
class PatternParams:
    """
    Per-class generation parameters with their defaults.

    Attributes:
        fill_prob: RDN per-cell probability of copper
        target_fill: PLG target fraction of the grid covered by the polygon
        max_vertices: PLG upper bound on the vertex count
        min_shapes: PTN lower bound on the shape count
        max_shapes: PTN upper bound on the shape count
    """
    fill_prob: float = 0.5
    target_fill: float = 0.4
    max_vertices: int = 8
    min_shapes: int = 2
    max_shapes: int = 6

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _rng(seed: int) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed < SEED_LIMIT:
        raise InvalidConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def gen_rdn(seed: int, fill_prob: float = 0.5) -> Pattern:
    """
    Unconstrained random pattern.

    Args:
        seed: 64-bit seed
        fill_prob: Probability that a cell carries copper

    Returns:
        Pattern: class RDN
    """
    if not 0.0 <= fill_prob <= 1.0:
        raise InvalidConfigError(f"fill_prob must be in [0, 1], got {fill_prob}")
    rng = _rng(seed)
    cells = rng.random((GRID_SIZE, GRID_SIZE)) < fill_prob
    return Pattern(cells.astype(np.uint8), class_tag=PatternClass.RDN, seed=int(seed))


def sample_polygon(rng: np.random.Generator, target_fill: float, max_vertices: int) -> np.ndarray:
    """Star-shaped polygon with its vertices snapped to grid nodes, (n, 2) as (x, y)."""
    n = int(rng.integers(3, max_vertices + 1))
    # circumradius of a regular n-gon with the target area
    area = target_fill * N_CELLS
    radius = math.sqrt(2.0 * area / (n * math.sin(2.0 * math.pi / n)))
    centre = rng.uniform(GRID_SIZE * 0.25, GRID_SIZE * 0.75, size=2)
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=n))
    radii = radius * rng.uniform(0.7, 1.3, size=n)
    vertices = np.column_stack([
        centre[0] + radii * np.cos(angles),
        centre[1] + radii * np.sin(angles),
    ])
    return np.clip(np.round(vertices), 0, GRID_SIZE)


def _rasterize(vertices: np.ndarray) -> np.ndarray:
    """Interior by cell-centre containment plus every cell an edge passes through."""
    inside = PolygonPath(vertices).contains_points(_CENTRES).reshape(GRID_SIZE, GRID_SIZE)
    cells = inside.astype(np.uint8)

    closed = np.vstack([vertices, vertices[:1]])
    for (x0, y0), (x1, y1) in zip(closed[:-1], closed[1:]):
        n = int(math.ceil(2.0 * math.hypot(x1 - x0, y1 - y0))) + 1
        xs = np.floor(np.linspace(x0, x1, n)).astype(int)
        ys = np.floor(np.linspace(y0, y1, n)).astype(int)
        keep = (xs >= 0) & (xs < GRID_SIZE) & (ys >= 0) & (ys < GRID_SIZE)
        cells[ys[keep], xs[keep]] = 1
    return cells


def _bridge(a: np.ndarray, b: np.ndarray) -> List[Tuple[int, int]]:
    """Shortest L-shaped 4-connected path between two cell sets (row, col)."""
    dist = np.abs(a[:, None, 0] - b[None, :, 0]) + np.abs(a[:, None, 1] - b[None, :, 1])
    i, j = np.unravel_index(int(np.argmin(dist)), dist.shape)
    (r0, c0), (r1, c1) = a[i], b[j]
    step_r = 1 if r1 >= r0 else -1
    step_c = 1 if c1 >= c0 else -1
    path = [(r, c0) for r in range(r0, r1 + step_r, step_r)]
    path += [(r1, c) for c in range(c0, c1 + step_c, step_c)]
    return path


def repair_connectivity(cells: np.ndarray) -> np.ndarray:
    """
    Join every component to the largest one.

    Components are bridged, in label order, to the growing main component with
    the shortest Manhattan L-path.

    Args:
        cells: Binary grid

    Returns:
        np.ndarray: A single 4-connected component (empty stays empty)
    """
    labels, n = label_components(cells)
    if n <= 1:
        return cells.astype(np.uint8)

    sizes = np.bincount(labels.ravel())[1:]
    largest = int(np.argmax(sizes)) + 1
    main = labels == largest

    for label in range(1, n + 1):
        if label == largest:
            continue
        component = labels == label
        if (main & component).any():
            continue
        path = _bridge(np.argwhere(component), np.argwhere(main))
        main |= component
        for r, c in path:
            main[r, c] = True
    return main.astype(np.uint8)


def gen_plg(seed: int, target_fill: float = 0.4, max_vertices: int = 8) -> Pattern:
    """
    Connected polygon-like pattern.

    A random star-shaped polygon is sampled around a random centre, its
    vertices snapped to integer grid nodes, then rasterized
    (interior plus boundary) and repaired to one 4-connected component.

    Args:
        seed: 64-bit seed
        target_fill: Target area fraction of the polygon, in (0, 1]
        max_vertices: Upper bound of the vertex count, at least 3

    Returns:
        Pattern: class PLG

    Raises:
        GenerationRetryExhausted: If no attempt produced a non-empty pattern
    """
    if not 0.0 < target_fill <= 1.0:
        raise InvalidConfigError(f"target_fill must be in (0, 1], got {target_fill}")
    if max_vertices < 3:
        raise InvalidConfigError(f"max_vertices must be at least 3, got {max_vertices}")

    rng = _rng(seed)
    for attempt in range(PLG_MAX_ATTEMPTS):
        cells = repair_connectivity(_rasterize(sample_polygon(rng, target_fill, max_vertices)))
        if cells.any():
            if attempt:
                logger.debug(f"PLG seed {seed} needed {attempt + 1} attempts")
            return Pattern(cells, class_tag=PatternClass.PLG, seed=int(seed))

    raise GenerationRetryExhausted(
        f"no connected polygon after {PLG_MAX_ATTEMPTS} attempts "
        f"(seed={seed}, target_fill={target_fill}, max_vertices={max_vertices})"
    )


def gen_ptn(seed: int, min_shapes: int = 2, max_shapes: int = 6) -> Pattern:
    """
    Combination of non-overlapping basic shapes.

    Args:
        seed: 64-bit seed
        min_shapes: Lower bound of the shape count, at least 1
        max_shapes: Upper bound of the shape count

    Returns:
        Pattern: class PTN with its placements recorded

    Raises:
        PlacementExhausted: If a shape found no free position in 1000 draws
    """
    if not 1 <= min_shapes <= max_shapes:
        raise InvalidConfigError(
            f"need 1 <= min_shapes <= max_shapes, got {min_shapes}, {max_shapes}"
        )

    rng = _rng(seed)
    count = int(rng.integers(min_shapes, max_shapes + 1))
    occupied = np.zeros((GRID_SIZE, GRID_SIZE), dtype=bool)
    placements = []

    for index in range(count):
        shape = SHAPES[SHAPE_ORDER[int(rng.integers(len(SHAPE_ORDER)))]]
        mask = shape.mask().astype(bool)
        for _ in range(PTN_MAX_REJECTIONS):
            row = int(rng.integers(0, GRID_SIZE - shape.height + 1))
            col = int(rng.integers(0, GRID_SIZE - shape.width + 1))
            window = occupied[row:row + shape.height, col:col + shape.width]
            if not (window & mask).any():
                window |= mask
                placements.append(Placement(shape.name, row, col))
                break
        else:
            raise PlacementExhausted(
                f"shape {index + 1}/{count} ({shape.name}) found no free position "
                f"in {PTN_MAX_REJECTIONS} draws (seed={seed})"
            )

    return Pattern.from_placements(placements, seed=int(seed))


def generate_pattern(class_tag: str, seed: int, params: Optional[PatternParams] = None) -> Pattern:
    """
    Dispatch to the generator of a class.

    Args:
        class_tag: PLG, PTN or RDN
        seed: 64-bit seed
        params: Generation parameters, defaults if None

    Returns:
        Pattern: The generated pattern
    """
    params = params or PatternParams()
    if class_tag == PatternClass.RDN:
        return gen_rdn(seed, params.fill_prob)
    if class_tag == PatternClass.PLG:
        return gen_plg(seed, params.target_fill, params.max_vertices)
    if class_tag == PatternClass.PTN:
        return gen_ptn(seed, params.min_shapes, params.max_shapes)
    raise InvalidConfigError(f"cannot generate patterns of class {class_tag!r}")
