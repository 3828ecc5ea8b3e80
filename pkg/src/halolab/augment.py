"""Density augmentation: lift near-threshold averages over a witness family.

Given a set E whose averages over selected witnesses exceed alpha - eps,
a sprinkling E' inside the witnesses' uncovered parts lifts every
witness average to at least alpha. Quotas are rounded up to whole cells,
which keeps the inequality chain valid verbatim and in fact makes every
lifted average strictly exceed alpha on the grid; the report records the
slack this rounding can add to the size bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .basis import BasisElement, BasisFamily, DEFAULT_ELEMENT_BUDGET, enumerate_elements
from .errors import ConfigError, EmptyWitnessFamilyError, InternalError
from .grid import CellSet
from .maximal import SummedAreaTable, superlevel_direct


@dataclass(frozen=True)
class AugmentPlan:
    """Level alpha, slack eps, and the derived per-witness density target.

    c = 1/(1 - alpha) makes c * (1 - alpha) = 1, the identity the whole
    lifting chain rests on; target_density = c * eps stays below 1
    because eps < 1 - alpha.
    """

    alpha: Fraction
    eps: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "eps", Fraction(self.eps))
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha", f"must lie in (0, 1), got {self.alpha}")
        bound = min(self.alpha / 2, 1 - self.alpha)
        if not 0 < self.eps < bound:
            raise ConfigError(
                "eps",
                f"must lie in (0, min(alpha/2, 1-alpha)) = (0, {bound}), got {self.eps}",
            )

    @property
    def c(self) -> Fraction:
        return 1 / (1 - self.alpha)

    @property
    def target_density(self) -> Fraction:
        return self.c * self.eps

    @property
    def threshold(self) -> Fraction:
        """Witness admission level: averages must strictly exceed alpha - eps."""
        return self.alpha - self.eps


@dataclass(frozen=True)
class WitnessFamily:
    """Every enumerated element whose average over E strictly clears the threshold."""

    elements: tuple[BasisElement, ...]
    union: CellSet
    threshold: Fraction

    @property
    def union_measure(self) -> Fraction:
        return self.union.measure


def witness_family(
    cells: CellSet,
    plan: AugmentPlan,
    family: BasisFamily,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> WitnessFamily:
    """Exhaustively filter the family to elements with average > alpha - eps.

    The filter is strict and exact: an average landing exactly on the
    threshold is excluded. An empty result means the construction cannot
    start and is an error, not an empty report.
    """
    if cells.is_empty:
        raise ConfigError("cells", "witness selection needs a nonempty set")
    geometry = cells.geometry
    table = SummedAreaTable(cells)
    t_num = plan.threshold.numerator
    t_den = plan.threshold.denominator
    chosen = []
    union = 0
    for element in enumerate_elements(family, geometry, budget):
        cnt = table.count_element(element)
        if cnt * t_den > t_num * element.cell_count:
            chosen.append(element)
            union |= element.mask(geometry)
    if not chosen:
        raise EmptyWitnessFamilyError(
            f"no element has average above {plan.threshold} over the given set"
        )
    return WitnessFamily(tuple(chosen), CellSet(geometry, union), plan.threshold)


def augment_set(
    cells: CellSet,
    witnesses: Sequence[BasisElement],
    plan: AugmentPlan,
    seed: int = 0,
) -> tuple[CellSet, CellSet]:
    """Choose E' inside the witnesses' uncovered parts and return (E-tilde, E').

    Every witness R gets at least ceil(target_density * |R - E|) chosen
    cells inside R - E; witnesses already inside E are satisfied
    vacuously. Cells are added greedily, most-unsatisfied-witnesses
    first with least-index tie-break, so the outcome is deterministic;
    the seed parameter is accepted for interface stability but the
    tie-break leaves it nothing to decide.
    """
    if not witnesses:
        raise ConfigError("witnesses", "witness family must be nonempty")
    geometry = cells.geometry
    table = SummedAreaTable(cells)
    density = plan.target_density
    remainders: list[int] = []
    quotas: list[int] = []
    for element in witnesses:
        cnt = table.count_element(element)
        if cnt * plan.threshold.denominator <= plan.threshold.numerator * element.cell_count:
            raise ConfigError(
                "witnesses",
                f"element {element.element_id} has average {Fraction(cnt, element.cell_count)}"
                f" <= threshold {plan.threshold}; not an admissible witness",
            )
        remainder = element.mask(geometry) & ~cells.mask
        m = remainder.bit_count()
        quota = -(-(density.numerator * m) // density.denominator)  # ceil
        remainders.append(remainder)
        quotas.append(quota if m else 0)

    # bit j of a cell's key: cell lies in witness j's uncovered part
    cell_keys: dict[int, int] = {}
    unsatisfied = 0
    for j, (remainder, quota) in enumerate(zip(remainders, quotas)):
        if quota == 0:
            continue
        if quota > remainder.bit_count():
            raise InternalError(
                f"witness quota {quota} exceeds its {remainder.bit_count()} available cells"
            )
        unsatisfied |= 1 << j
        r = remainder
        while r:
            low = r & -r
            cell = low.bit_length() - 1
            cell_keys[cell] = cell_keys.get(cell, 0) | (1 << j)
            r ^= low

    received = [0] * len(witnesses)
    chosen_mask = 0
    candidates = sorted(cell_keys)
    while unsatisfied:
        best_cell = -1
        best_count = 0
        for cell in candidates:
            if chosen_mask >> cell & 1:
                continue
            count = (cell_keys[cell] & unsatisfied).bit_count()
            if count > best_count:
                best_count = count
                best_cell = cell
        if best_cell < 0:
            raise InternalError("unsatisfied witnesses remain but no cell can serve them")
        chosen_mask |= 1 << best_cell
        served = cell_keys[best_cell] & unsatisfied
        while served:
            low = served & -served
            j = low.bit_length() - 1
            received[j] += 1
            if received[j] >= quotas[j]:
                unsatisfied &= ~(1 << j)
            served ^= low

    e_prime = CellSet(geometry, chosen_mask)
    e_tilde = CellSet(geometry, cells.mask | chosen_mask)
    return e_tilde, e_prime


@dataclass(frozen=True)
class WitnessCheck:
    element_id: int
    avg_before: Fraction
    avg_after: Fraction
    passes: bool
    strict: bool


@dataclass(frozen=True)
class LemmaChainReport:
    """Exact per-witness and global checks after augmentation.

    size bound: measure(E-tilde) <= measure(E) + target_density * measure(union),
    checked against the directly measured witness union. superlevel
    bound: the strict alpha-superlevel of the augmented set covers at
    least the union's measure. Both are recorded, never asserted.
    """

    plan: AugmentPlan
    witness_count: int
    per_witness: tuple[WitnessCheck, ...]
    e_prime_cells: int
    size_lhs: Fraction
    size_rhs: Fraction
    size_pass: bool
    superlevel_lhs: Fraction
    superlevel_rhs: Fraction
    superlevel_pass: bool
    notes: str

    @property
    def all_witnesses_pass(self) -> bool:
        return all(w.passes for w in self.per_witness)


def lemma_chain_report(
    cells: CellSet,
    e_tilde: CellSet,
    witnesses: Sequence[BasisElement],
    plan: AugmentPlan,
    family: BasisFamily,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> LemmaChainReport:
    """Verify the lifted averages and the two global bounds, exactly."""
    if not witnesses:
        raise ConfigError("witnesses", "witness family must be nonempty")
    geometry = cells.geometry
    if e_tilde.geometry != geometry:
        raise ConfigError("e_tilde", "augmented set lives on a different grid")
    if cells.mask & ~e_tilde.mask:
        raise ConfigError("e_tilde", "augmented set must contain the original set")
    before = SummedAreaTable(cells)
    after = SummedAreaTable(e_tilde)
    checks = []
    union = 0
    for element in witnesses:
        avg_before = Fraction(before.count_element(element), element.cell_count)
        avg_after = Fraction(after.count_element(element), element.cell_count)
        checks.append(
            WitnessCheck(
                element.element_id,
                avg_before,
                avg_after,
                avg_after >= plan.alpha,
                avg_after > plan.alpha,
            )
        )
        union |= element.mask(geometry)
    union_set = CellSet(geometry, union)
    size_lhs = e_tilde.measure
    size_rhs = cells.measure + plan.target_density * union_set.measure
    sup_lhs = superlevel_direct(e_tilde, family, plan.alpha, strict=True, budget=budget).measure
    sup_rhs = union_set.measure
    notes = (
        "per-witness quotas are rounded up to whole cells, which can add up "
        "to one cell per witness beyond the exact density target; the size "
        "bound is checked against the directly measured witness union"
    )
    return LemmaChainReport(
        plan,
        len(witnesses),
        tuple(checks),
        (e_tilde.mask & ~cells.mask).bit_count(),
        size_lhs,
        size_rhs,
        size_lhs <= size_rhs,
        sup_lhs,
        sup_rhs,
        sup_lhs >= sup_rhs,
        notes,
    )
