"""Generators for homothecy-invariant collections of box unions.

A family is a rule producing elements (finite unions of disjoint
axis-aligned boxes) on a given grid. Invariance under homothecies is
discretized to integer translations and integer scale factors; elements
whose support window would cross the grid boundary are omitted, never
clipped. Enumeration order is canonical and deterministic, so element
ids are stable across runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import BudgetExceededError, ConfigError
from .grid import CellSet, GridGeometry, box_mask

DEFAULT_ELEMENT_BUDGET = 1 << 20

KINDS = ("intervals", "cubes", "axis_rects", "jump_example", "explicit")


@dataclass(frozen=True)
class Box:
    """Half-open integer box [lo, hi) in cell coordinates."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(int(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(int(c) for c in self.hi))
        if len(self.lo) != len(self.hi):
            raise ConfigError("box", "lo and hi have different ranks")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ConfigError("box", f"empty or inverted range in [{self.lo}, {self.hi})")
        if any(a < 0 for a in self.lo):
            raise ConfigError("box", f"negative coordinate in {self.lo}")

    @property
    def volume(self) -> int:
        v = 1
        for a, b in zip(self.lo, self.hi):
            v *= b - a
        return v

    def overlaps(self, other: "Box") -> bool:
        return all(a < d and c < b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def mask(self, geometry: GridGeometry) -> int:
        return box_mask(geometry, self.lo, self.hi)

    def validate_in(self, geometry: GridGeometry) -> None:
        if len(self.lo) != geometry.dimension:
            raise ConfigError("box", f"rank {len(self.lo)} box on a {geometry.dimension}-d grid")
        for axis, b in enumerate(self.hi):
            if b > geometry.extent[axis]:
                raise ConfigError(
                    "box",
                    f"box reaches {b} on axis {axis}, past the extent {geometry.extent[axis]}",
                )


@dataclass(frozen=True)
class BasisElement:
    """One family member: a nonempty union of pairwise disjoint boxes."""

    boxes: tuple[Box, ...]
    element_id: int = -1

    def __post_init__(self):
        if not self.boxes:
            raise ConfigError("element", "an element needs at least one box")
        for a, b in itertools.combinations(self.boxes, 2):
            if a.overlaps(b):
                raise ConfigError("element", f"boxes {a} and {b} overlap")

    @property
    def cell_count(self) -> int:
        return sum(box.volume for box in self.boxes)

    def mask(self, geometry: GridGeometry) -> int:
        m = 0
        for box in self.boxes:
            m |= box.mask(geometry)
        return m

    def cells(self, geometry: GridGeometry) -> CellSet:
        return CellSet(geometry, self.mask(geometry))

    def contains_cell(self, geometry: GridGeometry, index: int) -> bool:
        return bool(self.mask(geometry) >> index & 1)


@dataclass(frozen=True)
class JumpParams:
    """Parameters of the two-block example family: base scales, gap
    lengths for the floating block, and the translation stride."""

    scales: tuple[int, ...]
    gaps: tuple[int, ...]
    stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        object.__setattr__(self, "gaps", tuple(int(e) for e in self.gaps))
        if not self.scales or any(s < 1 for s in self.scales):
            raise ConfigError("jump.scales", f"need positive scales, got {self.scales}")
        if not self.gaps or any(e < 1 for e in self.gaps):
            raise ConfigError("jump.gaps", f"need positive gap lengths, got {self.gaps}")
        if self.stride < 1:
            raise ConfigError("jump.stride", f"must be >= 1, got {self.stride}")
        if not any(e < s for s in self.scales for e in self.gaps):
            raise ConfigError("jump.gaps", "every gap is >= every scale; no valid element")


@dataclass(frozen=True)
class BasisFamily:
    """Descriptor of a family; elements are produced by enumerate_elements.

    ``scale_max`` of None means "up to the axis length". ``scale_max_frac``
    instead caps scales at floor(frac * axis length) per axis, which keeps
    a family's reach proportional to resolution across a ladder of grids.
    """

    kind: str
    scale_min: int = 1
    scale_max: int | None = None
    scale_max_frac: Fraction | None = None
    jump: JumpParams | None = None
    explicit: tuple[tuple[Box, ...], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("family.kind", f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.scale_min < 1:
            raise ConfigError("family.scale_min", f"must be >= 1, got {self.scale_min}")
        if self.scale_max is not None and self.scale_max < self.scale_min:
            raise ConfigError(
                "family.scale_max", f"{self.scale_max} is below scale_min {self.scale_min}"
            )
        if self.scale_max_frac is not None:
            frac = Fraction(self.scale_max_frac)
            if not 0 < frac <= 1:
                raise ConfigError("family.scale_max_frac", f"must lie in (0, 1], got {frac}")
            object.__setattr__(self, "scale_max_frac", frac)
        if self.kind == "jump_example" and self.jump is None:
            raise ConfigError("family.jump", "jump_example needs jump parameters")
        if self.kind == "explicit" and not self.explicit:
            raise ConfigError("family.explicit", "explicit family needs at least one element")

    def descriptor(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind in ("intervals", "cubes", "axis_rects"):
            d["scale_min"] = self.scale_min
            if self.scale_max is not None:
                d["scale_max"] = self.scale_max
            if self.scale_max_frac is not None:
                f = self.scale_max_frac
                d["scale_max_frac"] = f"{f.numerator}/{f.denominator}"
        if self.jump is not None:
            d["jump"] = {
                "scales": list(self.jump.scales),
                "gaps": list(self.jump.gaps),
                "stride": self.jump.stride,
            }
        if self.explicit:
            d["explicit"] = [
                [{"lo": list(b.lo), "hi": list(b.hi)} for b in boxes]
                for boxes in self.explicit
            ]
        return d

    def scale_range(self, axis_cells: int) -> range:
        """Scales enumerated on an axis of the given length."""
        if self.scale_max_frac is not None:
            cap = int(self.scale_max_frac * axis_cells)  # floor
        elif self.scale_max is not None:
            cap = self.scale_max
        else:
            cap = axis_cells
        cap = min(cap, axis_cells)
        return range(self.scale_min, cap + 1)


def rasterize_box(geometry: GridGeometry, lo: Sequence[int], hi: Sequence[int],
                  element_id: int = -1) -> BasisElement:
    """A single box as an element; identity rasterization."""
    box = Box(tuple(lo), tuple(hi))
    box.validate_in(geometry)
    return BasisElement((box,), element_id)


def rasterize_jump(geometry: GridGeometry, translate: int, scale: int, offset: int,
                   gap: int, element_id: int = -1) -> BasisElement:
    """Two-block element: base [t, t+s) plus a floating block of length
    ``gap`` at offset ``offset``, capped by the support window [t, t+2s).

    The whole window must lie inside the grid; elements are rejected, not
    clipped. Overlapping or touching blocks merge into a single box.
    """
    if geometry.dimension != 1:
        raise ConfigError("family.kind", "jump_example is one-dimensional")
    if gap >= scale:
        raise ConfigError("jump.gaps", f"gap {gap} must be smaller than the scale {scale}")
    if gap < 1 or scale < 1:
        raise ConfigError("jump.scales", "scale and gap must be positive")
    if not 0 <= offset <= 2 * scale - gap:
        raise ConfigError("jump.offset", f"offset {offset} outside [0, {2 * scale - gap}]")
    n = geometry.extent[0]
    if translate < 0 or translate + 2 * scale > n:
        raise ConfigError(
            "jump.translate",
            f"support window [{translate}, {translate + 2 * scale}) leaves the grid of {n} cells",
        )
    boxes = _jump_boxes(translate, scale, offset, gap)
    return BasisElement(boxes, element_id)


def _jump_boxes(t: int, s: int, x: int, e: int) -> tuple[Box, ...]:
    block_lo = t + x
    block_hi = min(t + x + e, t + 2 * s)
    if block_lo <= t + s:
        # The floating block overlaps or touches the base: one box.
        return (Box((t,), (max(t + s, block_hi),)),)
    return (Box((t,), (t + s,)), Box((block_lo,), (block_hi,)))


def _iter_positions(extent: tuple[int, ...], sides: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    ranges = [range(n - s + 1) for n, s in zip(extent, sides)]
    if any(len(r) == 0 for r in ranges):
        return
    yield from itertools.product(*ranges)


def _iter_jump_raw(family: BasisFamily, n: int) -> Iterator[tuple[Box, ...]]:
    """Deduplicated jump elements in canonical (s, e, t, x) order.

    Distinct parameters can rasterize to the same cell set (a floating
    block absorbed by the base); each cell set is yielded once.
    """
    jump = family.jump
    assert jump is not None
    seen: set[tuple[Box, ...]] = set()
    for s in sorted(set(jump.scales)):
        for e in sorted(set(jump.gaps)):
            if e >= s:
                continue
            t = 0
            while t + 2 * s <= n:
                for x in range(0, 2 * s - e + 1):
                    boxes = _jump_boxes(t, s, x, e)
                    if boxes not in seen:
                        seen.add(boxes)
                        yield boxes
                t += jump.stride


def count_elements(family: BasisFamily, geometry: GridGeometry) -> int:
    """Exact number of elements enumerate_elements would yield."""
    extent = geometry.extent
    if family.kind == "intervals":
        if geometry.dimension != 1:
            raise ConfigError("family.kind", "intervals are one-dimensional")
        n = extent[0]
        return sum(n - s + 1 for s in family.scale_range(n))
    if family.kind == "cubes":
        total = 0
        for s in family.scale_range(min(extent)):
            block = 1
            for n in extent:
                block *= max(0, n - s + 1)
            total += block
        return total
    if family.kind == "axis_rects":
        total = 1
        for n in extent:
            total *= sum(n - s + 1 for s in family.scale_range(n))
        return total
    if family.kind == "jump_example":
        if geometry.dimension != 1:
            raise ConfigError("family.kind", "jump_example is one-dimensional")
        return sum(1 for _ in _iter_jump_raw(family, extent[0]))
    if family.kind == "explicit":
        return len(family.explicit)
    raise ConfigError("family.kind", f"unknown kind {family.kind!r}")


def enumerate_elements(
    family: BasisFamily,
    geometry: GridGeometry,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> Iterator[BasisElement]:
    """Yield every family member that fits the grid, each exactly once,
    ids assigned in canonical enumeration order.

    The exact element count is checked against ``budget`` before anything
    is yielded; an oversized family fails whole, never partially.
    """
    total = count_elements(family, geometry)
    if total > budget:
        raise BudgetExceededError(required=total, budget=budget, what="element enumeration")
    return _generate(family, geometry)


def _generate(family: BasisFamily, geometry: GridGeometry) -> Iterator[BasisElement]:
    extent = geometry.extent
    next_id = 0
    if family.kind == "intervals":
        n = extent[0]
        for s in family.scale_range(n):
            for lo in range(n - s + 1):
                yield BasisElement((Box((lo,), (lo + s,)),), next_id)
                next_id += 1
    elif family.kind == "cubes":
        for s in family.scale_range(min(extent)):
            for pos in _iter_positions(extent, (s,) * geometry.dimension):
                hi = tuple(p + s for p in pos)
                yield BasisElement((Box(pos, hi),), next_id)
                next_id += 1
    elif family.kind == "axis_rects":
        side_ranges = [family.scale_range(n) for n in extent]
        for sides in itertools.product(*side_ranges):
            for pos in _iter_positions(extent, sides):
                hi = tuple(p + s for p, s in zip(pos, sides))
                yield BasisElement((Box(pos, hi),), next_id)
                next_id += 1
    elif family.kind == "jump_example":
        for boxes in _iter_jump_raw(family, extent[0]):
            yield BasisElement(boxes, next_id)
            next_id += 1
    elif family.kind == "explicit":
        for boxes in family.explicit:
            for box in boxes:
                box.validate_in(geometry)
            yield BasisElement(tuple(boxes), next_id)
            next_id += 1
    else:  # pragma: no cover - kinds validated at construction
        raise ConfigError("family.kind", f"unknown kind {family.kind!r}")


def elements_through(
    family: BasisFamily,
    geometry: GridGeometry,
    cell: int,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> Iterator[BasisElement]:
    """The subsequence of enumerate_elements whose cells include ``cell``,
    ids unchanged."""
    if not 0 <= cell < geometry.cell_count:
        raise IndexError(f"cell {cell} outside grid of {geometry.cell_count} cells")
    coords = geometry.coords_of(cell)
    elements = enumerate_elements(family, geometry, budget)

    def _hits(element: BasisElement) -> bool:
        for box in element.boxes:
            if all(a <= c < b for a, b, c in zip(box.lo, box.hi, coords)):
                return True
        return False

    return (el for el in elements if _hits(el))
