"""
Tests for the Pattern type, connectivity and symmetry operations.
"""
import numpy as np
from django.test import SimpleTestCase

from apps.patterns.generators import gen_plg, gen_ptn, gen_rdn
from apps.patterns.pattern import Pattern, PatternClass, Placement, is_connected
from apps.patterns.shapes import SHAPES, ShapeName
from apps.patterns.transforms import mirror_x, mirror_y, rot180
from utils.error_handling import InvalidPatternError


def _grid(*cells):
    grid = np.zeros((16, 16), dtype=np.uint8)
    for r, c in cells:
        grid[r, c] = 1
    return grid


class PatternTypeTests(SimpleTestCase):
    """Tests for Pattern validation and the text format."""

    def test_rejects_wrong_shape(self):
        with self.assertRaises(InvalidPatternError):
            Pattern(np.zeros((15, 16)))

    def test_rejects_non_binary(self):
        grid = np.zeros((16, 16))
        grid[3, 3] = 2
        with self.assertRaises(InvalidPatternError):
            Pattern(grid)

    def test_cells_are_read_only(self):
        p = Pattern.zeros()
        with self.assertRaises(ValueError):
            p.cells[0, 0] = 1

    def test_text_format(self):
        p = gen_rdn(5)
        text = p.to_text()
        lines = text.split('\n')
        self.assertEqual(len(lines), 17)
        self.assertEqual(lines[-1], '')
        self.assertTrue(all(len(line) == 16 for line in lines[:-1]))
        self.assertEqual(Pattern.from_text(text, class_tag=PatternClass.RDN), p)

    def test_text_format_rejects_garbage(self):
        with self.assertRaises(InvalidPatternError):
            Pattern.from_text('0101\n')
        with self.assertRaises(InvalidPatternError):
            Pattern.from_text(('0' * 15 + 'x\n') * 16)

    def test_encoding(self):
        encoded = Pattern.full().encoded()
        self.assertTrue(np.array_equal(encoded, np.ones((16, 16))))
        self.assertTrue(np.array_equal(Pattern.zeros().encoded(), -np.ones((16, 16))))

    def test_overlapping_placements_rejected(self):
        with self.assertRaises(InvalidPatternError):
            Pattern.from_placements([
                Placement(ShapeName.SQUARE, 0, 0),
                Placement(ShapeName.CROSS, 1, 1),
            ])

    def test_shape_pixel_counts(self):
        expected = {
            ShapeName.SQUARE: 9, ShapeName.CROSS: 5,
            ShapeName.TRIANGLE_N: 4, ShapeName.TRIANGLE_E: 4,
            ShapeName.TRIANGLE_S: 4, ShapeName.TRIANGLE_W: 4,
            ShapeName.U_SHAPE: 5, ShapeName.H_SHAPE: 7,
        }
        for name, count in expected.items():
            self.assertEqual(SHAPES[name].pixel_count, count)


class ConnectivityTests(SimpleTestCase):
    """Tests for is_connected."""

    def test_all_ones(self):
        self.assertTrue(is_connected(Pattern.full()))

    def test_diagonal_is_not_adjacent(self):
        self.assertFalse(is_connected(Pattern(_grid((0, 0), (1, 1)))))

    def test_single_cell(self):
        self.assertTrue(is_connected(Pattern(_grid((7, 7)))))

    def test_empty(self):
        self.assertFalse(is_connected(Pattern.zeros()))


class SymmetryTests(SimpleTestCase):
    """Tests for mirror_x, mirror_y and rot180."""

    def test_involutions(self):
        for seed in range(20):
            for p in (gen_rdn(seed), gen_plg(seed)):
                self.assertEqual(mirror_x(mirror_x(p)), p)
                self.assertEqual(mirror_y(mirror_y(p)), p)
                self.assertEqual(rot180(rot180(p)), p)
            p = gen_ptn(seed)
            # every catalog shape maps to a catalog shape under mirror_x
            self.assertEqual(mirror_x(mirror_x(p)), p)
            # a flipped U-shape demotes the tag, the cells still round-trip
            self.assertTrue(np.array_equal(mirror_y(mirror_y(p)).cells, p.cells))
            self.assertTrue(np.array_equal(rot180(rot180(p)).cells, p.cells))

    def test_rot180_is_composition(self):
        for seed in range(20):
            p = gen_rdn(seed)
            self.assertEqual(rot180(p), mirror_x(mirror_y(p)))
            self.assertEqual(rot180(p), mirror_y(mirror_x(p)))

    def test_symmetric_cross_is_fixed(self):
        # cross centred between rows/cols 7 and 8
        grid = np.zeros((16, 16), dtype=np.uint8)
        grid[7:9, 4:12] = 1
        grid[4:12, 7:9] = 1
        p = Pattern(grid)
        self.assertEqual(mirror_x(p), p)
        self.assertEqual(mirror_y(p), p)
        self.assertEqual(rot180(p), p)

    def test_mirror_x_reverses_columns(self):
        p = Pattern(_grid((2, 0)))
        self.assertEqual(mirror_x(p).cells[2, 15], 1)
        self.assertEqual(mirror_y(p).cells[13, 0], 1)

    def test_tags(self):
        self.assertEqual(mirror_x(gen_rdn(1)).class_tag, PatternClass.RDN)
        self.assertEqual(mirror_y(gen_plg(1)).class_tag, PatternClass.PLG)
        self.assertTrue(is_connected(rot180(gen_plg(1))))

    def test_ptn_triangles_swap_orientation(self):
        p = Pattern.from_placements([Placement(ShapeName.TRIANGLE_E, 2, 3)])
        mirrored = mirror_x(p)
        self.assertEqual(mirrored.class_tag, PatternClass.PTN)
        self.assertEqual(mirrored.placements[0].shape, ShapeName.TRIANGLE_W)
        self.assertEqual(Pattern.from_placements(mirrored.placements), mirrored)

        flipped = mirror_y(Pattern.from_placements([Placement(ShapeName.TRIANGLE_N, 0, 0)]))
        self.assertEqual(flipped.placements[0].shape, ShapeName.TRIANGLE_S)

    def test_ptn_u_shape_flipped_is_other(self):
        p = Pattern.from_placements([Placement(ShapeName.U_SHAPE, 5, 5)])
        self.assertEqual(mirror_x(p).class_tag, PatternClass.PTN)
        self.assertEqual(mirror_y(p).class_tag, PatternClass.OTHER)
        self.assertEqual(mirror_y(p).ones, 5)

    def test_transformed_ptn_placements_match_cells(self):
        for seed in range(100):
            p = rot180(gen_ptn(seed))
            if p.class_tag == PatternClass.PTN:
                self.assertEqual(Pattern.from_placements(p.placements), p)
