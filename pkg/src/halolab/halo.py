"""Lower bounds for the halo functional: exhaustion, search, curves.

The value probed at a level u > 1 is the best ratio between the measure
of the strict superlevel set {M chi_E > 1/u} and the measure of E, over
candidate sets E. Tiny grids are exhausted subset by subset; larger
grids get seeded heuristics. Every reported ratio is certified by its
stored witness: re-scoring the witness reproduces the ratio exactly.

Ratios are cell-count quotients, so the cell width never enters.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .basis import BasisFamily, DEFAULT_ELEMENT_BUDGET, enumerate_elements
from .errors import BudgetExceededError, ConfigError
from .grid import CellSet, GridGeometry, box_mask, random_set
from .maximal import SummedAreaTable, maximal_field, superlevel

DEFAULT_SUBSET_BUDGET = 1 << 20
DEFAULT_SEARCH_BUDGET = 128

SEARCH_METHODS = ("random", "hillclimb", "structured")
POINT_METHODS = ("exhaustive",) + SEARCH_METHODS + ("candidate", "identity")

# Subsets per vectorized chunk in the exhaustive path.
_CHUNK = 1 << 14
# Cross-multiplied threshold tests must stay inside int64.
_SAFE_FACTOR = 1 << 40


@dataclass(frozen=True)
class HaloPoint:
    """One evaluated level: the best ratio found and the set achieving it.

    method "identity" marks the conventional extension ratio = u at
    u <= 1, which carries no witness; every other method stores the
    nonempty witness whose re-evaluation reproduces ratio exactly.
    """

    u: Fraction
    ratio: Fraction
    witness: CellSet | None
    method: str
    seed: int

    def __post_init__(self):
        if self.method not in POINT_METHODS:
            raise ConfigError("method", f"unknown method {self.method!r}")
        if self.method == "identity":
            if self.u > 1 or self.witness is not None or self.ratio != self.u:
                raise ConfigError("u", "identity points require u <= 1 and ratio = u")
        else:
            if self.u <= 1:
                raise ConfigError("u", f"computed points require u > 1, got {self.u}")
            if self.witness is None or self.witness.is_empty:
                raise ConfigError("witness", "computed points require a nonempty witness")


@dataclass(frozen=True)
class HaloCurve:
    geometry: GridGeometry
    points: tuple[HaloPoint, ...]
    family: dict = field(compare=False, default_factory=dict)

    def __post_init__(self):
        us = [p.u for p in self.points]
        if any(b <= a for a, b in zip(us, us[1:])):
            raise ConfigError("u_grid", "curve levels must be strictly increasing")


@dataclass(frozen=True)
class JumpReport:
    """Adjacent-increment summary of a curve; descriptive, no pass/fail."""

    increments: tuple[tuple[Fraction, Fraction, Fraction], ...]
    largest: Fraction
    largest_between: tuple[Fraction, Fraction] | None
    first_u: Fraction
    first_ratio: Fraction
    last_u: Fraction
    last_ratio: Fraction


def _require_level(u) -> Fraction:
    u = Fraction(u)
    if u <= 1:
        raise ConfigError("u", f"level must exceed 1, got {u}")
    return u


class _Scorer:
    """Scores candidate sets against one family enumeration, reused across calls.

    The strict test average > 1/u is the integer comparison
    cnt * u_num > size * u_den; no rational is ever rounded.
    """

    def __init__(self, family: BasisFamily, geometry: GridGeometry, budget: int):
        self.geometry = geometry
        elements = list(enumerate_elements(family, geometry, budget))
        self.masks = [el.mask(geometry) for el in elements]
        self.shapes = [
            (el.cell_count, tuple((b.lo, b.hi) for b in el.boxes)) for el in elements
        ]

    def superlevel_count(self, cells: CellSet, u: Fraction) -> int:
        table = SummedAreaTable(cells)
        u_num, u_den = u.numerator, u.denominator
        level = 0
        for m, (size, boxes) in zip(self.masks, self.shapes):
            if m | level == level:
                continue
            cnt = sum(table.count_box(lo, hi) for lo, hi in boxes)
            if cnt * u_num > size * u_den:
                level |= m
        return level.bit_count()

    def ratio(self, cells: CellSet, u: Fraction) -> Fraction:
        return Fraction(self.superlevel_count(cells, u), cells.cell_count)


def halo_ratio(
    cells: CellSet,
    u,
    family: BasisFamily,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> Fraction:
    """Exact ratio |{M chi_E > 1/u}| / |E| for this one candidate set.

    A valid lower bound on the discrete halo at u. The u <= 1 regime is
    a curve-assembly convention, not a computation, and is rejected here.
    """
    u = _require_level(u)
    if cells.is_empty:
        raise ConfigError("cells", "candidate set must be nonempty")
    scorer = _Scorer(family, cells.geometry, budget)
    return scorer.ratio(cells, u)


def _exhaustive_python(
    total: int, masks: list[int], sizes: list[int], u_num: int, u_den: int
) -> tuple[Fraction, int]:
    best: Fraction | None = None
    best_mask = 0
    for sub in range(1, total + 1):
        level = 0
        for m, size in zip(masks, sizes):
            if m | level != level and (sub & m).bit_count() * u_num > size * u_den:
                level |= m
        ratio = Fraction(level.bit_count(), sub.bit_count())
        if best is None or ratio > best:
            best = ratio
            best_mask = sub
    return best, best_mask


def _exhaustive_numpy(
    total: int, masks: list[int], sizes: list[int], u_num: int, u_den: int, n_cells: int
) -> tuple[Fraction, int]:
    # Common-denominator integer keys make the per-chunk argmax exact.
    lcm = math.lcm(*range(1, n_cells + 1))
    pairs = [(np.uint64(m), np.int64(size * u_den)) for m, size in zip(masks, sizes)]
    best_key = -1
    best_mask = 0
    best = (0, 1)
    for start in range(1, total + 1, _CHUNK):
        stop = min(start + _CHUNK, total + 1)
        subs = np.arange(start, stop, dtype=np.uint64)
        level = np.zeros(subs.shape, dtype=np.uint64)
        for m, rhs in pairs:
            cnt = np.bitwise_count(subs & m).astype(np.int64)
            level[cnt * u_num > rhs] |= m
        pop_level = np.bitwise_count(level).astype(np.int64)
        pop_sub = np.bitwise_count(subs).astype(np.int64)
        key = pop_level * (lcm // pop_sub)
        idx = int(np.argmax(key))  # first occurrence: least mask wins ties
        if int(key[idx]) > best_key:
            best_key = int(key[idx])
            best_mask = int(subs[idx])
            best = (int(pop_level[idx]), int(pop_sub[idx]))
    return Fraction(*best), best_mask


def exact_discrete_halo(
    u,
    family: BasisFamily,
    geometry: GridGeometry,
    subset_budget: int = DEFAULT_SUBSET_BUDGET,
    element_budget: int = DEFAULT_ELEMENT_BUDGET,
) -> tuple[Fraction, CellSet]:
    """Maximum of halo_ratio over every nonempty subset of the grid.

    Exact on the grid by exhaustion; ties are broken toward the
    lexicographically least witness (least integer in cell-index order).
    """
    u = _require_level(u)
    n_cells = geometry.cell_count
    total = (1 << n_cells) - 1
    if total > subset_budget:
        raise BudgetExceededError(total, subset_budget, "subset enumeration")
    elements = list(enumerate_elements(family, geometry, element_budget))
    masks = [el.mask(geometry) for el in elements]
    sizes = [el.cell_count for el in elements]
    u_num, u_den = u.numerator, u.denominator
    vector_ok = (
        hasattr(np, "bitwise_count")
        and n_cells <= 62
        and u_num < _SAFE_FACTOR
        and u_den < _SAFE_FACTOR
    )
    if vector_ok:
        ratio, mask = _exhaustive_numpy(total, masks, sizes, u_num, u_den, n_cells)
    else:
        ratio, mask = _exhaustive_python(total, masks, sizes, u_num, u_den)
    return ratio, CellSet(geometry, mask)


def _structured_candidates(geometry: GridGeometry, family: BasisFamily) -> Iterable[int]:
    """Deterministic shape library; the single center cell always comes first."""
    extent = geometry.extent
    center = tuple(n // 2 for n in extent)
    yield 1 << geometry.index_of(center)
    full = (1 << geometry.cell_count) - 1
    yield full
    seen = {full}
    for s in range(2, min(extent) + 1):
        lo = tuple((n - s) // 2 for n in extent)
        hi = tuple(l + s for l in lo)
        m = box_mask(geometry, lo, hi)
        if m not in seen:
            seen.add(m)
            yield m
    if geometry.dimension == 1 and family.kind == "jump_example" and family.jump:
        n = extent[0]
        for s in family.jump.scales:
            if s <= n:
                m = box_mask(geometry, (0,), (s,))
                if m not in seen:
                    seen.add(m)
                    yield m
    if geometry.dimension == 1:
        n = extent[0]
        for half in range(1, n // 2 + 1):
            m = box_mask(geometry, (0,), (half,)) | box_mask(geometry, (n - half,), (n,))
            if m not in seen:
                seen.add(m)
                yield m


def _random_candidates(geometry: GridGeometry, seed: int) -> Iterable[int]:
    rng = random.Random(seed)
    densities = [Fraction(k, 8) for k in range(1, 8)]
    i = 0
    while True:
        density = densities[i % len(densities)]
        sub_seed = rng.getrandbits(32)
        yield random_set(geometry, density, sub_seed).mask
        i += 1


def halo_search(
    u,
    family: BasisFamily,
    geometry: GridGeometry,
    strategy: str = "structured",
    seed: int = 0,
    budget: int = DEFAULT_SEARCH_BUDGET,
    element_budget: int = DEFAULT_ELEMENT_BUDGET,
) -> HaloPoint:
    """Best candidate found within a fixed number of exact evaluations.

    Deterministic given (strategy, seed, budget): equal ratios are broken
    toward the lexicographically least witness mask.
    """
    u = _require_level(u)
    if strategy not in SEARCH_METHODS:
        raise ConfigError("strategy", f"unknown strategy {strategy!r}")
    if budget < 1:
        raise ConfigError("budget", f"search budget must be >= 1, got {budget}")
    scorer = _Scorer(family, geometry, element_budget)
    best_ratio: Fraction | None = None
    best_mask = 0
    evals = 0

    def score(mask: int) -> Fraction:
        nonlocal best_ratio, best_mask, evals
        evals += 1
        ratio = Fraction(
            scorer.superlevel_count(CellSet(geometry, mask), u), mask.bit_count()
        )
        if best_ratio is None or ratio > best_ratio or (ratio == best_ratio and mask < best_mask):
            best_ratio = ratio
            best_mask = mask
        return ratio

    if strategy == "structured":
        for mask in _structured_candidates(geometry, family):
            if evals >= budget:
                break
            score(mask)
    elif strategy == "random":
        for mask in _random_candidates(geometry, seed):
            if evals >= budget:
                break
            if mask == 0:
                evals += 1
                continue
            score(mask)
    else:
        rng = random.Random(seed)
        n_cells = geometry.cell_count
        full = (1 << n_cells) - 1
        while evals < budget:
            current = random_set(geometry, Fraction(1, 2), rng.getrandbits(32)).mask
            if current == 0:
                evals += 1
                continue
            current_ratio = score(current)
            improving = True
            while improving and evals < budget:
                improving = False
                order = list(range(n_cells))
                rng.shuffle(order)
                for cell in order:
                    if evals >= budget:
                        break
                    flipped = current ^ (1 << cell)
                    if flipped == 0:
                        continue
                    ratio = score(flipped)
                    if ratio > current_ratio:
                        current, current_ratio = flipped, ratio
                        improving = True
                        break
                # a full pass with no improvement is a plateau: restart

    if best_ratio is None or best_mask == 0:
        raise ConfigError("budget", "no nonempty candidate was evaluated within budget")
    return HaloPoint(u, best_ratio, CellSet(geometry, best_mask), strategy, seed)


def halo_curve(
    u_grid: Sequence,
    family: BasisFamily,
    geometry: GridGeometry,
    strategy: str = "structured",
    seed: int = 0,
    budget: int | None = None,
    element_budget: int = DEFAULT_ELEMENT_BUDGET,
    pool_witnesses: bool = True,
) -> HaloCurve:
    """One point per level, with witnesses pooled across the whole grid.

    Levels at u <= 1 are emitted verbatim as the conventional extension
    ratio = u, without computation. Pooling re-scores every witness at
    every computed level (one superlevel per witness-level pair), which
    forces the reported ratios to be nondecreasing.
    """
    levels = [Fraction(v) for v in u_grid]
    if not levels:
        raise ConfigError("u_grid", "level grid must be nonempty")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigError("u_grid", "levels must be strictly increasing")
    if levels[0] <= 0:
        raise ConfigError("u_grid", f"levels must be positive, got {levels[0]}")
    if strategy not in ("exhaustive",) + SEARCH_METHODS:
        raise ConfigError("strategy", f"unknown strategy {strategy!r}")
    if budget is None:
        budget = DEFAULT_SUBSET_BUDGET if strategy == "exhaustive" else DEFAULT_SEARCH_BUDGET

    identity = [u for u in levels if u <= 1]
    computed = [u for u in levels if u > 1]
    found: list[tuple[Fraction, Fraction, int]] = []
    for idx, u in enumerate(computed):
        if strategy == "exhaustive":
            ratio, witness = exact_discrete_halo(
                u, family, geometry, subset_budget=budget, element_budget=element_budget
            )
            found.append((u, ratio, witness.mask))
        else:
            point = halo_search(
                u, family, geometry, strategy, seed + idx, budget, element_budget
            )
            found.append((u, point.ratio, point.witness.mask))

    points = [HaloPoint(u, u, None, "identity", seed) for u in identity]
    if pool_witnesses and len({mask for _, _, mask in found}) > 1:
        # One field per witness, then one cheap threshold per (witness, u).
        pool = sorted({mask for _, _, mask in found})
        fields = {
            mask: maximal_field(CellSet(geometry, mask), family, element_budget)
            for mask in pool
        }
        for u, own_ratio, own_mask in found:
            best_ratio, best_mask = own_ratio, own_mask
            threshold = Fraction(u.denominator, u.numerator)
            for mask in pool:
                marked = superlevel(fields[mask], threshold, strict=True)
                ratio = Fraction(marked.cell_count, mask.bit_count())
                if ratio > best_ratio or (ratio == best_ratio and mask < best_mask):
                    best_ratio, best_mask = ratio, mask
            points.append(HaloPoint(u, best_ratio, CellSet(geometry, best_mask), strategy, seed))
    else:
        for u, ratio, mask in found:
            points.append(HaloPoint(u, ratio, CellSet(geometry, mask), strategy, seed))
    return HaloCurve(geometry, tuple(points), family.descriptor())


def continuity_scan(curve: HaloCurve) -> JumpReport:
    """Adjacent-level increments of a curve: evidence, never proof.

    The discrete halo is a step function of u, so the scan only locates
    where the sampled curve moves, including the conventional rows below 1.
    """
    if len(curve.points) < 2:
        raise ConfigError("curve", "scan needs at least two points")
    increments = []
    largest: Fraction | None = None
    largest_between = None
    for a, b in zip(curve.points, curve.points[1:]):
        delta = b.ratio - a.ratio
        increments.append((a.u, b.u, delta))
        if largest is None or delta > largest:
            largest = delta
            largest_between = (a.u, b.u)
    first, last = curve.points[0], curve.points[-1]
    return JumpReport(
        tuple(increments), largest, largest_between, first.u, first.ratio, last.u, last.ratio
    )
