"""Family descriptors and element enumeration."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from halolab.basis import (
    BasisElement,
    BasisFamily,
    Box,
    JumpParams,
    count_elements,
    elements_through,
    enumerate_elements,
    rasterize_jump,
)
from halolab.errors import BudgetExceededError, ConfigError
from halolab.grid import GridGeometry

from reference import ref_intervals, ref_rects


F = Fraction


def geom(n, h="1"):
    return GridGeometry(1, (n,), F(h))


class TestBox:
    def test_volume(self):
        assert Box((1, 2), (4, 5)).volume == 9

    def test_empty_range_rejected(self):
        with pytest.raises(ConfigError):
            Box((2,), (2,))

    def test_inverted_rejected(self):
        with pytest.raises(ConfigError):
            Box((3,), (1,))

    def test_negative_rejected(self):
        with pytest.raises(ConfigError):
            Box((-1,), (2,))

    def test_overlap_detection(self):
        assert Box((0,), (3,)).overlaps(Box((2,), (5,)))
        assert not Box((0,), (3,)).overlaps(Box((3,), (5,)))


class TestBasisElement:
    def test_needs_a_box(self):
        with pytest.raises(ConfigError):
            BasisElement(())

    def test_rejects_overlapping_boxes(self):
        with pytest.raises(ConfigError):
            BasisElement((Box((0,), (3,)), Box((2,), (4,))))

    def test_cell_count_sums_disjoint_boxes(self):
        el = BasisElement((Box((0,), (2,)), Box((5,), (6,))))
        assert el.cell_count == 3

    def test_mask_matches_cells(self):
        g = geom(8)
        el = BasisElement((Box((1,), (3,)), Box((6,), (8,))))
        assert sorted(el.cells(g).iter_cells()) == [1, 2, 6, 7]


class TestFamilyValidation:
    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            BasisFamily("pyramids")

    def test_scale_bounds(self):
        with pytest.raises(ConfigError):
            BasisFamily("intervals", scale_min=0)
        with pytest.raises(ConfigError):
            BasisFamily("intervals", scale_min=3, scale_max=2)

    def test_scale_max_frac_range(self):
        with pytest.raises(ConfigError):
            BasisFamily("intervals", scale_max_frac=F(3, 2))
        assert BasisFamily("intervals", scale_max_frac=F(1, 2)).scale_max_frac == F(1, 2)

    def test_jump_needs_params(self):
        with pytest.raises(ConfigError):
            BasisFamily("jump_example")

    def test_explicit_needs_elements(self):
        with pytest.raises(ConfigError):
            BasisFamily("explicit")

    def test_jump_params_need_viable_pair(self):
        with pytest.raises(ConfigError):
            JumpParams((4,), (5, 6))

    def test_descriptor_round_trip_fields(self):
        fam = BasisFamily("intervals", scale_min=2, scale_max_frac=F(1, 2))
        d = fam.descriptor()
        assert d == {"kind": "intervals", "scale_min": 2, "scale_max_frac": "1/2"}


class TestCounts:
    def test_intervals_count(self):
        # all intervals on n cells: n + (n-1) + ... + 1
        for n in (1, 4, 12):
            assert count_elements(BasisFamily("intervals"), geom(n)) == n * (n + 1) // 2
            assert count_elements(BasisFamily("intervals"), geom(n)) == len(ref_intervals(n))

    def test_axis_rects_count(self):
        g = GridGeometry(2, (8, 8), F(1))
        assert count_elements(BasisFamily("axis_rects"), g) == len(ref_rects(8, 8))

    def test_cubes_count(self):
        g = GridGeometry(2, (4, 3), F(1))
        # side s placements: (4-s+1)(3-s+1) for s in 1..3
        assert count_elements(BasisFamily("cubes"), g) == 12 + 6 + 2

    def test_scale_caps_respected(self):
        fam = BasisFamily("intervals", scale_max=2)
        assert count_elements(fam, geom(5)) == 5 + 4
        frac = BasisFamily("intervals", scale_max_frac=F(1, 2))
        assert count_elements(frac, geom(8)) == 8 + 7 + 6 + 5

    def test_enumeration_matches_count(self):
        for fam, g in [
            (BasisFamily("intervals"), geom(9)),
            (BasisFamily("axis_rects"), GridGeometry(2, (4, 5), F(1))),
            (BasisFamily("cubes"), GridGeometry(2, (4, 4), F(1))),
            (BasisFamily("jump_example", jump=JumpParams((3,), (1, 2))), geom(12)),
        ]:
            elements = list(enumerate_elements(fam, g))
            assert len(elements) == count_elements(fam, g)
            assert [el.element_id for el in elements] == list(range(len(elements)))

    def test_budget_checked_before_yield(self):
        with pytest.raises(BudgetExceededError) as err:
            list(enumerate_elements(BasisFamily("intervals"), geom(100), budget=10))
        assert err.value.required == 100 * 101 // 2
        assert err.value.budget == 10


class TestJumpFamily:
    def test_two_blocks_with_gap(self):
        g = geom(12)
        el = rasterize_jump(g, translate=0, scale=3, offset=4, gap=2)
        # base [0,3) plus a 2-cell floating block at [4,6)
        assert sorted(el.cells(g).iter_cells()) == [0, 1, 2, 4, 5]

    def test_absorbed_offset_merges(self):
        g = geom(12)
        el = rasterize_jump(g, translate=0, scale=3, offset=1, gap=2)
        # the floating block [1,3) sits inside the base: one box survives
        assert len(el.boxes) == 1
        assert el.cell_count == 3

    def test_enumeration_deduplicates(self):
        fam = BasisFamily("jump_example", jump=JumpParams((2,), (1,)))
        masks = [el.mask(geom(8)) for el in enumerate_elements(fam, geom(8))]
        assert len(masks) == len(set(masks))

    def test_support_stays_in_window(self):
        fam = BasisFamily("jump_example", jump=JumpParams((3,), (1, 2)))
        for el in enumerate_elements(fam, geom(16)):
            cells = sorted(el.cells(geom(16)).iter_cells())
            lo = min(cells)
            assert max(cells) < lo + 6  # window [t, t + 2s)
            assert 3 <= el.cell_count <= 5  # base plus at most the gap block

    def test_window_must_fit(self):
        fam = BasisFamily("jump_example", jump=JumpParams((5,), (1,)))
        assert count_elements(fam, geom(9)) == 0


class TestExplicitFamily:
    def test_elements_verbatim(self):
        fam = BasisFamily(
            "explicit",
            explicit=((Box((0,), (2,)),), (Box((1,), (3,)), Box((5,), (6,)))),
        )
        elements = list(enumerate_elements(fam, geom(8)))
        assert len(elements) == 2
        assert elements[1].cell_count == 3

    def test_out_of_grid_element_rejected(self):
        fam = BasisFamily("explicit", explicit=((Box((0,), (9,)),),))
        with pytest.raises(ConfigError):
            list(enumerate_elements(fam, geom(8)))


class TestElementsThrough:
    def test_intervals_through_left_edge(self):
        # every interval [0, b) contains cell 0, nothing else does
        g = geom(4)
        hits = list(elements_through(BasisFamily("intervals"), g, 0))
        assert len(hits) == 4
        assert sorted(el.cell_count for el in hits) == [1, 2, 3, 4]

    def test_cubes_through_corner(self):
        g = GridGeometry(2, (3, 3), F(1))
        fam = BasisFamily("cubes", scale_min=1, scale_max=2)
        hits = list(elements_through(fam, g, g.index_of((0, 0))))
        assert len(hits) == 2
        assert sorted(el.cell_count for el in hits) == [1, 4]

    def test_matches_membership_filter(self):
        g = geom(6)
        fam = BasisFamily("intervals")
        full = list(enumerate_elements(fam, g))
        for cell in range(g.cell_count):
            expected = [el for el in full if cell in el.cells(g).iter_cells()]
            got = list(elements_through(fam, g, cell))
            assert [el.element_id for el in got] == [el.element_id for el in expected]
            assert [el.mask(g) for el in got] == [el.mask(g) for el in expected]

    def test_matches_membership_filter_2d(self):
        g = GridGeometry(2, (3, 2), F(1))
        fam = BasisFamily("axis_rects")
        full = list(enumerate_elements(fam, g))
        cell = g.index_of((1, 1))
        expected = [el for el in full if cell in el.cells(g).iter_cells()]
        got = list(elements_through(fam, g, cell))
        assert [el.element_id for el in got] == [el.element_id for el in expected]

    def test_bad_cell_rejected(self):
        g = geom(4)
        with pytest.raises(IndexError):
            list(elements_through(BasisFamily("intervals"), g, 4))
        with pytest.raises(IndexError):
            list(elements_through(BasisFamily("intervals"), g, -1))


@settings(max_examples=40)
@given(st.integers(min_value=1, max_value=20))
def test_interval_masks_match_reference(n):
    g = geom(n)
    got = {el.mask(g) for el in enumerate_elements(BasisFamily("intervals"), g)}
    want = {sum(1 << c for c in iv) for iv in ref_intervals(n)}
    assert got == want


@settings(max_examples=20)
@given(st.integers(min_value=1, max_value=5), st.integers(min_value=1, max_value=5))
def test_rect_masks_match_reference(nx, ny):
    g = GridGeometry(2, (nx, ny), F(1))
    got = {frozenset(el.cells(g).iter_cells()) for el in enumerate_elements(BasisFamily("axis_rects"), g)}
    assert got == set(ref_rects(nx, ny))
