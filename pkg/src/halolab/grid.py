"""Exact grid geometry and measurable sets as bit-vectors.

A grid discretizes a box in R^n (n <= 3) into cells of rational side
length h. Sets are unions of half-open cells stored as one Python int
bitmask, cell i at bit i, with row-major linear indexing (the last axis
varies fastest). Every measure is an exact Fraction: popcount times h^n.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, GeometryMismatchError, RasterizeError

DEFAULT_CELL_BUDGET = 1 << 24


def parse_rational(value, field_name: str = "rational") -> Fraction:
    """Parse an exact rational from an int, Fraction, or string.

    Strings may be fractions ("101/100") or decimal literals ("0.25"),
    both parsed exactly. Binary floats are rejected: they silently
    misrepresent thresholds, and every comparison here must be exact.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigError(field_name, "expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise ConfigError(
            field_name,
            "floats are not accepted; write the value as a string like '1/3' or '0.25'",
        )
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(field_name, f"cannot parse rational from {value!r}") from exc
    raise ConfigError(field_name, f"cannot parse rational from {value!r}")


@dataclass(frozen=True)
class GridGeometry:
    """Discretization of a box: dimension, per-axis cell counts, cell width.

    The total cell count must fit ``cell_budget``; larger grids are a
    configuration error, never a silent truncation.
    """

    dimension: int
    extent: tuple[int, ...]
    cell_width: Fraction
    cell_budget: int = field(default=DEFAULT_CELL_BUDGET, compare=False)

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ConfigError("dimension", f"must be 1, 2, or 3, got {self.dimension}")
        object.__setattr__(self, "extent", tuple(int(n) for n in self.extent))
        if len(self.extent) != self.dimension:
            raise ConfigError(
                "extent",
                f"expected {self.dimension} axis lengths, got {len(self.extent)}",
            )
        if any(n < 1 for n in self.extent):
            raise ConfigError("extent", f"axis lengths must be positive, got {self.extent}")
        object.__setattr__(self, "cell_width", Fraction(self.cell_width))
        if self.cell_width <= 0:
            raise ConfigError("cell_width", f"must be positive, got {self.cell_width}")
        total = 1
        for n in self.extent:
            total *= n
        if total > self.cell_budget:
            raise ConfigError(
                "extent",
                f"grid has {total} cells, exceeding the cell budget {self.cell_budget}",
            )

    @property
    def cell_count(self) -> int:
        total = 1
        for n in self.extent:
            total *= n
        return total

    @property
    def cell_measure(self) -> Fraction:
        return self.cell_width**self.dimension

    def index_of(self, coords: Sequence[int]) -> int:
        """Row-major linear index of a cell; rejects out-of-range coords."""
        if len(coords) != self.dimension:
            raise IndexError(f"expected {self.dimension} coordinates, got {len(coords)}")
        idx = 0
        for c, n in zip(coords, self.extent):
            if not 0 <= c < n:
                raise IndexError(f"coordinate {coords} outside extent {self.extent}")
            idx = idx * n + c
        return idx

    def coords_of(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.cell_count:
            raise IndexError(f"cell index {index} outside grid of {self.cell_count} cells")
        coords = []
        for n in reversed(self.extent):
            coords.append(index % n)
            index //= n
        return tuple(reversed(coords))

    def descriptor(self) -> dict:
        return {
            "dimension": self.dimension,
            "extent": list(self.extent),
            "cell_width": f"{self.cell_width.numerator}/{self.cell_width.denominator}",
        }


@dataclass(frozen=True)
class CellSet:
    """A measurable set as a bitmask over grid cells. Immutable."""

    geometry: GridGeometry
    mask: int = 0

    def __post_init__(self):
        if not 0 <= self.mask < (1 << self.geometry.cell_count):
            raise ConfigError(
                "mask", "bit-vector length does not match the grid's cell count"
            )

    # -- constructors ------------------------------------------------

    @classmethod
    def empty(cls, geometry: GridGeometry) -> "CellSet":
        return cls(geometry, 0)

    @classmethod
    def full(cls, geometry: GridGeometry) -> "CellSet":
        return cls(geometry, (1 << geometry.cell_count) - 1)

    @classmethod
    def from_cells(cls, geometry: GridGeometry, cells: Iterable[int]) -> "CellSet":
        mask = 0
        count = geometry.cell_count
        for c in cells:
            if not 0 <= c < count:
                raise IndexError(f"cell index {c} outside grid of {count} cells")
            mask |= 1 << c
        return cls(geometry, mask)

    @classmethod
    def from_ranges(
        cls,
        geometry: GridGeometry,
        ranges: Sequence[tuple[Sequence[int], Sequence[int]]],
    ) -> "CellSet":
        """Union of axis-aligned half-open boxes given as (lo, hi) coord pairs."""
        mask = 0
        for lo, hi in ranges:
            mask |= box_mask(geometry, tuple(lo), tuple(hi))
        return cls(geometry, mask)

    @classmethod
    def from_fractions(
        cls,
        geometry: GridGeometry,
        boxes: Sequence[tuple[Sequence[Fraction], Sequence[Fraction]]],
    ) -> "CellSet":
        """Rasterize boxes given per-axis as fractions of the domain.

        Every fraction times the axis cell count must land exactly on a
        cell boundary, otherwise the shape is not representable on this
        grid and a RasterizeError is raised.
        """
        ranges = []
        for lo, hi in boxes:
            lo_cells = []
            hi_cells = []
            for axis, (lf, hf) in enumerate(zip(lo, hi)):
                n = geometry.extent[axis]
                lo_exact = Fraction(lf) * n
                hi_exact = Fraction(hf) * n
                if lo_exact.denominator != 1 or hi_exact.denominator != 1:
                    raise RasterizeError(
                        f"fraction box ({lf}, {hf}) does not land on cell "
                        f"boundaries of an axis with {n} cells"
                    )
                lo_cells.append(int(lo_exact))
                hi_cells.append(int(hi_exact))
            ranges.append((tuple(lo_cells), tuple(hi_cells)))
        return cls.from_ranges(geometry, ranges)

    # -- queries -----------------------------------------------------

    @property
    def cell_count(self) -> int:
        return self.mask.bit_count()

    @property
    def measure(self) -> Fraction:
        return self.cell_count * self.geometry.cell_measure

    @property
    def is_empty(self) -> bool:
        return self.mask == 0

    def contains(self, index: int) -> bool:
        if not 0 <= index < self.geometry.cell_count:
            raise IndexError(
                f"cell index {index} outside grid of {self.geometry.cell_count} cells"
            )
        return bool(self.mask >> index & 1)

    def contains_coords(self, coords: Sequence[int]) -> bool:
        return self.contains(self.geometry.index_of(coords))

    def iter_cells(self) -> Iterator[int]:
        mask = self.mask
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def to_numpy(self) -> np.ndarray:
        """0/1 uint8 array of length cell_count, cell i at position i."""
        count = self.geometry.cell_count
        nbytes = (count + 7) // 8
        raw = np.frombuffer(self.mask.to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[:count]

    # -- set algebra ---------------------------------------------------

    def _check(self, other: "CellSet") -> None:
        if self.geometry != other.geometry:
            raise GeometryMismatchError(
                f"operands live on different grids: {self.geometry.extent} vs "
                f"{other.geometry.extent}"
            )

    def union(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.geometry, self.mask | other.mask)

    def intersect(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.geometry, self.mask & other.mask)

    def difference(self, other: "CellSet") -> "CellSet":
        self._check(other)
        return CellSet(self.geometry, self.mask & ~other.mask)

    def complement(self) -> "CellSet":
        return CellSet(self.geometry, self.mask ^ ((1 << self.geometry.cell_count) - 1))

    def issubset(self, other: "CellSet") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    __or__ = union
    __and__ = intersect
    __sub__ = difference

    def __invert__(self) -> "CellSet":
        return self.complement()

    def __contains__(self, index: int) -> bool:
        return self.contains(index)

    # -- serialization -------------------------------------------------

    @property
    def hex_mask(self) -> str:
        """The bit-vector alone, in hex: nibble j holds cells 4j..4j+3
        (cell 4j at the nibble's least significant bit), so the most
        significant cell comes last in the string."""
        nibbles = (self.geometry.cell_count + 3) // 4
        return "".join(f"{(self.mask >> (4 * j)) & 0xF:x}" for j in range(nibbles))

    def serialize(self) -> str:
        """Canonical text form: geometry prefix plus the bit-vector in hex."""
        g = self.geometry
        extent = ",".join(str(n) for n in g.extent)
        h = g.cell_width
        return f"n={g.dimension};extent={extent};h={h.numerator}/{h.denominator};{self.hex_mask}"

    @classmethod
    def parse(cls, text: str) -> "CellSet":
        try:
            n_part, extent_part, h_part, hex_part = text.split(";")
            dimension = int(n_part.removeprefix("n="))
            extent = tuple(int(x) for x in extent_part.removeprefix("extent=").split(","))
            h = Fraction(h_part.removeprefix("h="))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError("cellset", f"cannot parse serialized set {text!r}") from exc
        geometry = GridGeometry(dimension, extent, h)
        expected = (geometry.cell_count + 3) // 4
        if len(hex_part) != expected:
            raise ConfigError(
                "cellset",
                f"hex part has {len(hex_part)} nibbles, geometry needs {expected}",
            )
        mask = 0
        for j, ch in enumerate(hex_part):
            mask |= int(ch, 16) << (4 * j)
        return cls(geometry, mask)


def box_mask(geometry: GridGeometry, lo: tuple[int, ...], hi: tuple[int, ...]) -> int:
    """Bitmask of the half-open box [lo, hi); validates bounds."""
    if len(lo) != geometry.dimension or len(hi) != geometry.dimension:
        raise ConfigError("box", f"box rank does not match dimension {geometry.dimension}")
    for axis, (a, b) in enumerate(zip(lo, hi)):
        if not (0 <= a < b <= geometry.extent[axis]):
            raise ConfigError(
                "box",
                f"range [{a},{b}) invalid on axis {axis} with {geometry.extent[axis]} cells",
            )
    # Row segments along the last axis are contiguous runs of bits.
    run = (1 << (hi[-1] - lo[-1])) - 1
    mask = 0
    if geometry.dimension == 1:
        return run << lo[0]
    lead_ranges = [range(a, b) for a, b in zip(lo[:-1], hi[:-1])]
    strides = []
    acc = 1
    for n in reversed(geometry.extent):
        strides.append(acc)
        acc *= n
    strides = tuple(reversed(strides))
    for lead in itertools.product(*lead_ranges):
        base = sum(c * s for c, s in zip(lead, strides[:-1]))
        mask |= run << (base + lo[-1])
    return mask


def random_set(geometry: GridGeometry, density: Fraction, seed: int) -> CellSet:
    """Each cell included independently with exact probability ``density``.

    Identical (geometry, density, seed) triples always produce identical
    sets. Inclusion is decided by an integer draw below the density's
    numerator, so densities 0 and 1 are exact, not approximate.
    """
    density = Fraction(density)
    if not 0 <= density <= 1:
        raise ConfigError("density", f"must lie in [0, 1], got {density}")
    rng = random.Random(seed)
    num, den = density.numerator, density.denominator
    mask = 0
    for i in range(geometry.cell_count):
        if rng.randrange(den) < num:
            mask |= 1 << i
    return CellSet(geometry, mask)
