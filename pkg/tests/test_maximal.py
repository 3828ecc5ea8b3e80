"""Maximal averages, the summed-area table, and superlevel sets."""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from halolab.basis import BasisElement, BasisFamily, Box
from halolab.errors import ConfigError, GeometryMismatchError
from halolab.grid import CellSet, GridGeometry, random_set
from halolab.maximal import (
    SummedAreaTable,
    average,
    maximal_field,
    superlevel,
    superlevel_direct,
)

from reference import ref_maximal_values, ref_maximal_values_rects


F = Fraction


def geom(n, h="1"):
    return GridGeometry(1, (n,), F(h))


INTERVALS = BasisFamily("intervals")


class TestSummedAreaTable:
    def test_count_box_1d(self):
        s = CellSet.from_cells(geom(8), [0, 2, 3, 7])
        t = SummedAreaTable(s)
        assert t.count_box((0,), (8,)) == 4
        assert t.count_box((2,), (4,)) == 2
        assert t.count_box((4,), (7,)) == 0

    def test_count_box_2d_matches_brute_force(self):
        g = GridGeometry(2, (5, 4), F(1))
        s = random_set(g, F(1, 2), 13)
        t = SummedAreaTable(s)
        cells = set(s.iter_cells())
        for lo_x, lo_y in itertools.product(range(5), range(4)):
            for hi_x in range(lo_x + 1, 6):
                for hi_y in range(lo_y + 1, 5):
                    want = sum(
                        1
                        for x in range(lo_x, hi_x)
                        for y in range(lo_y, hi_y)
                        if g.index_of((x, y)) in cells
                    )
                    assert t.count_box((lo_x, lo_y), (hi_x, hi_y)) == want

    def test_count_element_sums_boxes(self):
        g = geom(10)
        s = CellSet.from_cells(g, [0, 1, 5, 6, 7])
        t = SummedAreaTable(s)
        el = BasisElement((Box((0,), (2,)), Box((5,), (8,))))
        assert t.count_element(el) == 5


class TestAverage:
    def test_exact_fraction(self):
        g = geom(10)
        e = CellSet.from_cells(g, [0, 1, 2])
        el = BasisElement((Box((0,), (4,)),))
        assert average(el, e) == F(3, 4)

    def test_geometry_checked(self):
        el = BasisElement((Box((0,), (20,)),))
        with pytest.raises((ConfigError, GeometryMismatchError, IndexError)):
            average(el, CellSet.from_cells(geom(10), [0]))


class TestMaximalField:
    def test_single_cell_seed_matches_reference(self):
        fieldv = maximal_field(CellSet.from_cells(geom(6), [0]), INTERVALS)
        assert list(fieldv.values) == ref_maximal_values(6, {0})

    def test_random_sets_match_reference(self):
        for seed in range(6):
            g = geom(9)
            e = random_set(g, F(1, 2), seed)
            if e.is_empty:
                continue
            fieldv = maximal_field(e, INTERVALS)
            assert list(fieldv.values) == ref_maximal_values(9, set(e.iter_cells()))

    def test_2d_rects_match_reference(self):
        g = GridGeometry(2, (4, 3), F(1))
        e = random_set(g, F(1, 2), 5)
        fieldv = maximal_field(e, BasisFamily("axis_rects"))
        assert list(fieldv.values) == ref_maximal_values_rects(4, 3, set(e.iter_cells()))

    def test_worker_count_invisible(self):
        g = geom(40)
        e = random_set(g, F(1, 3), 2)
        lone = maximal_field(e, INTERVALS, workers=1)
        many = maximal_field(e, INTERVALS, workers=8)
        assert lone.values == many.values
        assert lone.covered == many.covered

    def test_uncovered_cells_when_family_is_partial(self):
        fam = BasisFamily("explicit", explicit=((Box((0,), (2,)),),))
        fieldv = maximal_field(CellSet.from_cells(geom(4), [0]), fam)
        assert fieldv.uncovered_count == 2
        assert fieldv.values[3] == F(0)

    def test_full_set_gives_ones(self):
        fieldv = maximal_field(CellSet.full(geom(7)), INTERVALS)
        assert set(fieldv.values) == {F(1)}

    def test_provenance_records_inputs(self):
        fieldv = maximal_field(CellSet.from_cells(geom(5), [1]), INTERVALS)
        assert fieldv.provenance["family"]["kind"] == "intervals"
        assert fieldv.provenance["elements"] == 15


class TestSuperlevel:
    def test_strict_vs_nonstrict_at_attained_level(self):
        # E = {0}: the maximal field on 4 cells is 1, 1/2, 1/3, 1/4
        fieldv = maximal_field(CellSet.from_cells(geom(4), [0]), INTERVALS)
        strict = superlevel(fieldv, F(1, 2), strict=True)
        loose = superlevel(fieldv, F(1, 2), strict=False)
        assert sorted(strict.iter_cells()) == [0]
        assert sorted(loose.iter_cells()) == [0, 1]

    def test_level_zero_nonstrict_is_everything(self):
        fieldv = maximal_field(CellSet.from_cells(geom(4), [0]), INTERVALS)
        assert superlevel(fieldv, F(0), strict=False) == CellSet.full(geom(4))

    def test_level_outside_unit_interval_rejected(self):
        fieldv = maximal_field(CellSet.from_cells(geom(4), [0]), INTERVALS)
        with pytest.raises(ConfigError):
            superlevel(fieldv, F(3, 2), strict=True)
        with pytest.raises(ConfigError):
            superlevel(fieldv, F(-1, 2), strict=False)


class TestDirectEquivalence:
    def _assert_equal_paths(self, e, family, levels):
        for level in levels:
            for strict in (True, False):
                via_field = superlevel(maximal_field(e, family), level, strict)
                direct = superlevel_direct(e, family, level, strict)
                assert direct == via_field

    def test_1d_seeded(self):
        g = geom(24)
        levels = [F(0), F(1, 4), F(1, 2), F(2, 3), F(1)]
        for seed in range(8):
            self._assert_equal_paths(random_set(g, F(1, 2), seed), INTERVALS, levels)

    def test_2d_seeded(self):
        g = GridGeometry(2, (6, 6), F(1))
        fam = BasisFamily("axis_rects")
        levels = [F(1, 4), F(1, 2), F(3, 4)]
        for seed in range(4):
            self._assert_equal_paths(random_set(g, F(1, 2), seed), fam, levels)

    def test_direct_worker_count_invisible(self):
        g = geom(48)
        e = random_set(g, F(2, 5), 11)
        lone = superlevel_direct(e, INTERVALS, F(1, 2), True, workers=1)
        many = superlevel_direct(e, INTERVALS, F(1, 2), True, workers=8)
        assert lone == many

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(min_value=1, max_value=12),
        st.data(),
    )
    def test_equivalence_property(self, n, data):
        mask = data.draw(st.integers(min_value=0, max_value=(1 << n) - 1))
        num = data.draw(st.integers(min_value=0, max_value=8))
        level = F(num, 8)
        strict = data.draw(st.booleans())
        e = CellSet(geom(n), mask)
        via_field = superlevel(maximal_field(e, INTERVALS), level, strict)
        assert superlevel_direct(e, INTERVALS, level, strict) == via_field

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=1, max_value=12), st.data())
    def test_superlevel_monotone_in_level(self, n, data):
        mask = data.draw(st.integers(min_value=1, max_value=(1 << n) - 1))
        e = CellSet(geom(n), mask)
        fieldv = maximal_field(e, INTERVALS)
        lo = F(data.draw(st.integers(min_value=0, max_value=7)), 8)
        hi = lo + F(1, 8)
        assert superlevel(fieldv, hi, False).issubset(superlevel(fieldv, lo, False))
        assert superlevel(fieldv, lo, True).issubset(superlevel(fieldv, lo, False))
