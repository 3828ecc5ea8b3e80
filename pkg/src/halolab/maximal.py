"""The discrete geometric maximal operator on indicator sets, exactly.

The value at a cell is the best average of the indicator over all
enumerated elements containing that cell, an exact rational in [0, 1].
Averages are cell-count ratios (the cell width cancels), looked up in
constant time per box through a summed-area table. Threshold logic is
never floating point: the strict/non-strict distinction at a level is
decidable and decided.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .basis import BasisElement, BasisFamily, DEFAULT_ELEMENT_BUDGET, enumerate_elements
from .errors import ConfigError
from .grid import CellSet, GridGeometry

ZERO = Fraction(0)
ONE = Fraction(1)


class SummedAreaTable:
    """Prefix sums of a cell set; box cell counts in O(2^n) lookups."""

    def __init__(self, cells: CellSet):
        self.geometry = cells.geometry
        extent = self.geometry.extent
        arr = cells.to_numpy().astype(np.int64).reshape(extent)
        padded = np.zeros(tuple(n + 1 for n in extent), dtype=np.int64)
        padded[tuple(slice(1, None) for _ in extent)] = arr
        for axis in range(len(extent)):
            np.cumsum(padded, axis=axis, out=padded)
        self._table = padded
        self._dim = len(extent)

    def count_box(self, lo: Sequence[int], hi: Sequence[int]) -> int:
        """Number of set cells inside the half-open box [lo, hi)."""
        table = self._table
        if self._dim == 1:
            return int(table[hi[0]] - table[lo[0]])
        total = 0
        for picks in itertools.product((0, 1), repeat=self._dim):
            corner = tuple(h if p else l for p, l, h in zip(picks, lo, hi))
            sign = 1 if (self._dim - sum(picks)) % 2 == 0 else -1
            total += sign * int(table[corner])
        return total

    def count_element(self, element: BasisElement) -> int:
        return sum(self.count_box(b.lo, b.hi) for b in element.boxes)


def average(element: BasisElement, cells: CellSet, table: SummedAreaTable | None = None) -> Fraction:
    """|E intersect R| / |R| as an exact rational; the cell width cancels."""
    if table is None:
        table = SummedAreaTable(cells)
    elif table.geometry != cells.geometry:
        raise ConfigError("table", "summed-area table built on a different grid")
    return Fraction(table.count_element(element), element.cell_count)


@dataclass(frozen=True)
class MaximalField:
    """Per-cell maximal values plus which cells any element covered.

    Cells covered by no enumerated element carry the value 0; their count
    is reported rather than treated as an error, since scale-bounded
    families legitimately leave cells unreached.
    """

    geometry: GridGeometry
    values: tuple[Fraction, ...]
    covered: CellSet
    provenance: dict = field(compare=False, default_factory=dict)

    @property
    def uncovered_count(self) -> int:
        return self.geometry.cell_count - self.covered.cell_count

    def value_at(self, index: int) -> Fraction:
        return self.values[index]


def _element_partitions(elements: list[BasisElement], workers: int) -> list[list[BasisElement]]:
    return [elements[w::workers] for w in range(workers)]


def _field_pass(
    elements: Iterable[BasisElement],
    table: SummedAreaTable,
    geometry: GridGeometry,
) -> tuple[dict[int, Fraction], int]:
    best: dict[int, Fraction] = {}
    covered = 0
    for element in elements:
        avg = Fraction(table.count_element(element), element.cell_count)
        covered |= element.mask(geometry)
        for cell in CellSet(geometry, element.mask(geometry)).iter_cells():
            prev = best.get(cell)
            if prev is None or avg > prev:
                best[cell] = avg
    return best, covered


def maximal_field(
    cells: CellSet,
    family: BasisFamily,
    budget: int = DEFAULT_ELEMENT_BUDGET,
    workers: int = 1,
) -> MaximalField:
    """Apply the maximal operator to an indicator set, cell by cell.

    With several workers the element stream is partitioned and per-worker
    maxima merged pointwise; the merge is associative and commutative, so
    the result is identical for any worker count.
    """
    geometry = cells.geometry
    table = SummedAreaTable(cells)
    elements = list(enumerate_elements(family, geometry, budget))
    if workers < 1:
        raise ConfigError("workers", f"must be >= 1, got {workers}")
    if workers == 1 or len(elements) < 2:
        partials = [_field_pass(elements, table, geometry)]
    else:
        parts = _element_partitions(elements, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda p: _field_pass(p, table, geometry), parts))
    best: dict[int, Fraction] = {}
    covered = 0
    for part_best, part_covered in partials:
        covered |= part_covered
        for cell, value in part_best.items():
            prev = best.get(cell)
            if prev is None or value > prev:
                best[cell] = value
    values = tuple(best.get(i, ZERO) for i in range(geometry.cell_count))
    provenance = {
        "family": family.descriptor(),
        "budget": budget,
        "elements": len(elements),
    }
    return MaximalField(geometry, values, CellSet(geometry, covered), provenance)


def superlevel(fieldv: MaximalField, level: Fraction, strict: bool) -> CellSet:
    """Cells where the field exceeds (strict) or meets (non-strict) the level."""
    level = Fraction(level)
    if not 0 <= level <= 1:
        raise ConfigError("level", f"must lie in [0, 1], got {level}")
    mask = 0
    for i, value in enumerate(fieldv.values):
        if value > level if strict else value >= level:
            mask |= 1 << i
    return CellSet(fieldv.geometry, mask)


def _marking_pass(
    elements: Iterable[BasisElement],
    table: SummedAreaTable,
    geometry: GridGeometry,
    num: int,
    den: int,
    strict: bool,
) -> int:
    marked = 0
    for element in elements:
        emask = element.mask(geometry)
        if emask | marked == marked:
            continue  # all cells already in; skip the count lookup
        cnt = table.count_element(element)
        size = element.cell_count
        passes = cnt * den > num * size if strict else cnt * den >= num * size
        if passes:
            marked |= emask
    return marked


def superlevel_direct(
    cells: CellSet,
    family: BasisFamily,
    level: Fraction,
    strict: bool,
    budget: int = DEFAULT_ELEMENT_BUDGET,
    workers: int = 1,
) -> CellSet:
    """Superlevel set of the maximal field without materializing the field.

    The set is the union of all elements whose average passes the level,
    so elements are marked directly; bit-identical to going through
    maximal_field and superlevel.
    """
    level = Fraction(level)
    if not 0 <= level <= 1:
        raise ConfigError("level", f"must lie in [0, 1], got {level}")
    geometry = cells.geometry
    if not strict and level == 0:
        # Every cell has value >= 0, covered or not.
        return CellSet.full(geometry)
    if workers < 1:
        raise ConfigError("workers", f"must be >= 1, got {workers}")
    table = SummedAreaTable(cells)
    num, den = level.numerator, level.denominator
    if workers == 1:
        elements: Iterable[BasisElement] = enumerate_elements(family, geometry, budget)
        marked = _marking_pass(elements, table, geometry, num, den, strict)
    else:
        element_list = list(enumerate_elements(family, geometry, budget))
        parts = _element_partitions(element_list, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            marks = list(
                pool.map(lambda p: _marking_pass(p, table, geometry, num, den, strict), parts)
            )
        marked = 0
        for m in marks:
            marked |= m
    return CellSet(geometry, marked)
