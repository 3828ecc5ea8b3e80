"""Iterated superlevel orbits and the covering-depth constant.

The orbit of a set E at level gamma repeatedly applies: take the
maximal field of the current set, keep the cells where it is >= gamma.
A fixed depth K(alpha, gamma, n), computed by certified integer
ceilings of logarithms, bounds how many iterations the covering
argument needs. Containment and chain-bound experiments report what
the grid actually does; discretization may break continuum facts, so
these are measurements, never assertions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .basis import BasisElement, BasisFamily, DEFAULT_ELEMENT_BUDGET
from .errors import BudgetExceededError, ConfigError, InternalError, RasterizeError
from .grid import CellSet, GridGeometry
from .maximal import average, maximal_field, superlevel, superlevel_direct

ONE = Fraction(1)


@dataclass(frozen=True)
class IterationParams:
    """Level pair for the iteration: average target alpha below level gamma."""

    alpha: Fraction
    gamma: Fraction
    n: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "gamma", Fraction(self.gamma))
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha", f"must lie in (0, 1), got {self.alpha}")
        if not 0 < self.gamma < 1:
            raise ConfigError("gamma", f"must lie in (0, 1), got {self.gamma}")
        if self.alpha >= self.gamma:
            raise ConfigError(
                "alpha", f"must be strictly below gamma, got alpha={self.alpha} gamma={self.gamma}"
            )
        if self.n < 1:
            raise ConfigError("n", f"dimension must be >= 1, got {self.n}")

    @property
    def gamma_up(self) -> Fraction:
        """Midpoint level between gamma and 1, used by the chained bound."""
        return self.gamma + (1 - self.gamma) / 2


def least_power_at_least(base: Fraction, target: Fraction) -> int:
    """Least m >= 0 with base**m >= target, in exact rational arithmetic.

    This is the certified ceiling of log_base(target): no floating-point
    logarithm is consulted, so no rounding can shift the answer.
    """
    base = Fraction(base)
    target = Fraction(target)
    if base <= 1:
        raise ConfigError("base", f"power base must exceed 1, got {base}")
    m = 0
    power = ONE
    while power < target:
        power *= base
        m += 1
    return m


def k_alpha_gamma(alpha, gamma, n: int) -> int:
    """Iteration depth sufficient for the covering argument at (alpha, gamma).

    Both ceilings are decided by least-power comparisons; re-evaluating
    at any higher precision cannot change the result because no rounding
    ever happens.
    """
    params = IterationParams(alpha, gamma, n)
    alpha, gamma = params.alpha, params.gamma
    inv_gamma = 1 / gamma
    # ceil(log(gamma/alpha) / log(1/gamma)), and gamma/alpha > 1 so it is >= 1
    first = least_power_at_least(inv_gamma, gamma / alpha)
    # ceil(2 + logplus(gamma * 2^n) / log(1/gamma)); logplus caps at zero
    t = gamma * (1 << n)
    second = 2 + (least_power_at_least(inv_gamma, t) if t > 1 else 0)
    return first * second + 1


@dataclass(frozen=True)
class HaloOrbit:
    """Sets H^0..H^k with per-step measures; H^0 is the seed set."""

    gamma: Fraction
    sets: tuple[CellSet, ...]
    measures: tuple[Fraction, ...]

    @property
    def depth(self) -> int:
        return len(self.sets) - 1

    @property
    def grew(self) -> tuple[bool, ...]:
        """Per step: did the measure strictly increase over the previous step."""
        return (False,) + tuple(
            b > a for a, b in zip(self.measures, self.measures[1:])
        )

    @property
    def stabilized_at(self) -> int | None:
        """First step whose set equals the previous one, if any."""
        for j in range(1, len(self.sets)):
            if self.sets[j].mask == self.sets[j - 1].mask:
                return j
        return None


def halo_orbit(
    cells: CellSet,
    gamma,
    k: int,
    family: BasisFamily,
    budget: int = DEFAULT_ELEMENT_BUDGET,
    workers: int = 1,
) -> HaloOrbit:
    """Iterate the non-strict gamma-superlevel of the maximal field k times."""
    gamma = Fraction(gamma)
    if not 0 < gamma < 1:
        raise ConfigError("gamma", f"must lie in (0, 1), got {gamma}")
    if k < 0:
        raise ConfigError("k", f"step count must be >= 0, got {k}")
    sets = [cells]
    current = cells
    for step in range(1, k + 1):
        if current.is_empty:
            # the maximal field of the empty set is identically 0 < gamma
            nxt = CellSet.empty(cells.geometry)
        else:
            try:
                nxt = superlevel_direct(
                    current, family, gamma, strict=False, budget=budget, workers=workers
                )
            except BudgetExceededError as exc:
                raise BudgetExceededError(
                    exc.required, exc.budget, f"orbit step {step}: {exc.what}"
                ) from exc
        sets.append(nxt)
        current = nxt
    measures = tuple(s.measure for s in sets)
    return HaloOrbit(gamma, tuple(sets), measures)


@dataclass(frozen=True)
class ContainmentReport:
    """Whether one element ended up inside the orbit of a set it half-covers."""

    params: IterationParams
    depth: int
    element_average: Fraction
    contained: bool
    first_step: int | None
    orbit: HaloOrbit


def containment_experiment(
    element: BasisElement,
    cells: CellSet,
    params: IterationParams,
    family: BasisFamily,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> ContainmentReport:
    """Run the orbit to depth K(alpha, gamma, n) and test element containment.

    Containment is measured against the iterates H^1.. (not the seed
    H^0): step j reports whether every cell of the element lies in H^j.
    This is an experiment, not an invariant; coarse grids may fail it.
    """
    avg = average(element, cells)
    if avg < params.alpha:
        raise ConfigError(
            "element",
            f"element average {avg} is below alpha={params.alpha}; "
            "the experiment requires average >= alpha",
        )
    depth = k_alpha_gamma(params.alpha, params.gamma, params.n)
    orbit = halo_orbit(cells, params.gamma, depth, family, budget)
    emask = element.mask(cells.geometry)
    first = None
    for j in range(1, depth + 1):
        if emask | orbit.sets[j].mask == orbit.sets[j].mask:
            first = j
            break
    contained = emask | orbit.sets[depth].mask == orbit.sets[depth].mask
    return ContainmentReport(params, depth, avg, contained, first, orbit)


@dataclass(frozen=True)
class ChainedBoundReport:
    """Per-step growth ratios at the lifted level, against a probe constant.

    bound_holds records whether the strict alpha-superlevel measure is
    at most C_probe**depth times the seed measure; nothing is asserted.
    """

    params: IterationParams
    gamma_up: Fraction
    depth: int
    c_probe: Fraction
    step_ratios: tuple[Fraction | None, ...]
    steps_within: tuple[bool, ...]
    superlevel_measure: Fraction
    seed_measure: Fraction
    bound_value: Fraction
    bound_holds: bool
    orbit: HaloOrbit
    notes: str


def chained_bound_report(
    cells: CellSet,
    params: IterationParams,
    family: BasisFamily,
    c_probe,
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> ChainedBoundReport:
    """Measure the orbit at the lifted level gamma_up and the alpha-superlevel.

    step_ratios[j-1] is measure(H^j)/measure(H^{j-1}), None when the
    previous step is empty (an empty orbit satisfies the chain
    trivially). steps_within flags ratios <= c_probe.
    """
    c_probe = Fraction(c_probe)
    if c_probe < 1:
        raise ConfigError("c_probe", f"probe constant must be >= 1, got {c_probe}")
    lifted = params.gamma_up
    depth = k_alpha_gamma(params.alpha, lifted, params.n)
    orbit = halo_orbit(cells, lifted, depth, family, budget)
    ratios: list[Fraction | None] = []
    within: list[bool] = []
    for prev, cur in zip(orbit.measures, orbit.measures[1:]):
        if prev == 0:
            ratios.append(None)
            within.append(True)
        else:
            r = cur / prev
            ratios.append(r)
            within.append(r <= c_probe)
    if cells.is_empty:
        sup_measure = Fraction(0)
    else:
        sup_measure = superlevel_direct(
            cells, family, params.alpha, strict=True, budget=budget
        ).measure
    seed_measure = cells.measure
    bound_value = c_probe**depth * seed_measure
    notes = (
        "probe constant applied at level alpha/2 throughout; an alpha/10 "
        "variant of the same constant appearing once in the underlying "
        "derivation is treated as a misprint and not used"
    )
    return ChainedBoundReport(
        params,
        lifted,
        depth,
        c_probe,
        tuple(ratios),
        tuple(within),
        sup_measure,
        seed_measure,
        bound_value,
        sup_measure <= bound_value,
        orbit,
        notes,
    )


@dataclass(frozen=True)
class GapRung:
    """Exact strict-vs-non-strict superlevel measures at one resolution."""

    extent: tuple[int, ...]
    cell_width: Fraction
    set_cells: int
    measure_ge: Fraction
    measure_gt: Fraction
    gap: Fraction
    gap_cells: int


@dataclass(frozen=True)
class GapReport:
    gamma: Fraction
    rungs: tuple[GapRung, ...]
    skipped: tuple[tuple[tuple[int, ...], str], ...]

    @property
    def gaps(self) -> tuple[Fraction, ...]:
        return tuple(r.gap for r in self.rungs)


def strict_gap_report(
    shape: list,
    gamma,
    family: BasisFamily,
    ladder: list[GridGeometry],
    budget: int = DEFAULT_ELEMENT_BUDGET,
) -> GapReport:
    """Measure {M >= gamma} minus {M > gamma} across a resolution ladder.

    The candidate set is given shape-wise, as fraction-of-domain ranges,
    so it re-rasterizes exactly on each rung; rungs where it cannot are
    skipped with a notice. The gap is never negative: the strict set is
    contained in the non-strict one by definition.
    """
    gamma = Fraction(gamma)
    if not 0 < gamma <= 1:
        raise ConfigError("gamma", f"must lie in (0, 1], got {gamma}")
    if not ladder:
        raise ConfigError("ladder", "resolution ladder must be nonempty")
    rungs: list[GapRung] = []
    skipped: list[tuple[tuple[int, ...], str]] = []
    for geometry in ladder:
        try:
            cells = CellSet.from_fractions(geometry, shape)
        except RasterizeError as exc:
            skipped.append((geometry.extent, str(exc)))
            continue
        field = maximal_field(cells, family, budget)
        meas_ge = superlevel(field, gamma, strict=False).measure
        meas_gt = superlevel(field, gamma, strict=True).measure
        gap = meas_ge - meas_gt
        if gap < 0:
            raise InternalError(
                f"strict superlevel exceeded non-strict at extent {geometry.extent}"
            )
        gap_cells = int(gap / geometry.cell_measure)
        rungs.append(
            GapRung(
                geometry.extent,
                geometry.cell_width,
                cells.cell_count,
                meas_ge,
                meas_gt,
                gap,
                gap_cells,
            )
        )
    return GapReport(gamma, tuple(rungs), tuple(skipped))
