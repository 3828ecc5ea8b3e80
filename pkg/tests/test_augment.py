"""Witness filtering, density augmentation, and the verification report."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from halolab.augment import (
    AugmentPlan,
    augment_set,
    lemma_chain_report,
    witness_family,
)
from halolab.basis import BasisElement, BasisFamily, Box
from halolab.errors import ConfigError, EmptyWitnessFamilyError
from halolab.grid import CellSet, GridGeometry, random_set
from halolab.maximal import average


F = Fraction


def geom(n, h="1"):
    return GridGeometry(1, (n,), F(h))


INTERVALS = BasisFamily("intervals")


class TestAugmentPlan:
    def test_derived_quantities(self):
        plan = AugmentPlan(F(3, 4), F(3, 50))
        assert plan.c == 4
        assert plan.target_density == F(6, 25)
        assert plan.threshold == F(3, 4) - F(3, 50)

    def test_alpha_in_open_interval(self):
        with pytest.raises(ConfigError):
            AugmentPlan(F(0), F(1, 10))
        with pytest.raises(ConfigError):
            AugmentPlan(F(1), F(1, 10))

    def test_eps_window(self):
        # eps must stay below min(alpha/2, 1 - alpha)
        with pytest.raises(ConfigError) as err:
            AugmentPlan(F(3, 4), F(1, 4))
        assert err.value.field == "eps"
        with pytest.raises(ConfigError):
            AugmentPlan(F(1, 2), F(1, 4))
        assert AugmentPlan(F(1, 2), F(1, 5)).eps == F(1, 5)


class TestWitnessFamily:
    def test_threshold_is_strict(self):
        # N=10, E = {0..6}: the full-grid interval averages exactly 7/10,
        # which equals alpha - eps and so fails; [0,9) gives 7/9 and passes
        e = CellSet.from_cells(geom(10), range(7))
        plan = AugmentPlan(F(3, 4), F(1, 20))
        fam = witness_family(e, plan, INTERVALS)
        masks = {el.mask(geom(10)) for el in fam.elements}
        assert (1 << 10) - 1 not in masks
        assert (1 << 9) - 1 in masks

    def test_full_grid_set_passes_everything(self):
        e = CellSet.full(geom(6))
        plan = AugmentPlan(F(3, 4), F(1, 8))
        fam = witness_family(e, plan, INTERVALS)
        assert len(fam.elements) == 6 * 7 // 2
        assert fam.union_measure == F(6)

    def test_no_witness_is_an_error(self):
        # an isolated cell cannot push any length->=2 interval past 11/16
        e = CellSet.from_cells(geom(10), [0])
        plan = AugmentPlan(F(3, 4), F(1, 16))
        coarse = BasisFamily("intervals", scale_min=2)
        with pytest.raises(EmptyWitnessFamilyError):
            witness_family(e, plan, coarse)
        with pytest.raises(ConfigError):
            witness_family(CellSet.empty(geom(10)), plan, INTERVALS)

    def test_union_contains_all_witnesses(self):
        e = random_set(geom(20), F(1, 2), 1)
        plan = AugmentPlan(F(1, 2), F(1, 8))
        fam = witness_family(e, plan, INTERVALS)
        for el in fam.elements:
            assert el.cells(geom(20)).issubset(fam.union)


class TestAugmentSet:
    def test_single_witness_worked_example(self):
        # R = [0,10), |E cap R| = 7, alpha = 3/4, eps = 3/50:
        # c = 4, target density 6/25, quota ceil(18/25) = 1 cell,
        # new average 8/10 >= 3/4
        g = geom(10)
        e = CellSet.from_cells(g, range(7))
        witness = BasisElement((Box((0,), (10,)),))
        plan = AugmentPlan(F(3, 4), F(3, 50))
        e_tilde, e_prime = augment_set(e, [witness], plan)
        assert e_prime.cell_count == 1
        assert e_tilde.cell_count == 8
        assert average(witness, e_tilde) == F(8, 10)

    def test_augmented_set_extends_the_original(self):
        g = geom(24)
        e = random_set(g, F(1, 2), 3)
        plan = AugmentPlan(F(1, 2), F(1, 10))
        fam = witness_family(e, plan, INTERVALS)
        e_tilde, e_prime = augment_set(e, fam.elements, plan)
        assert e.issubset(e_tilde)
        assert e_prime.intersect(e).is_empty
        assert e.union(e_prime) == e_tilde

    def test_deterministic(self):
        g = geom(32)
        e = random_set(g, F(2, 5), 9)
        plan = AugmentPlan(F(1, 2), F(1, 16))
        fam = witness_family(e, plan, INTERVALS)
        first = augment_set(e, fam.elements, plan, seed=0)
        second = augment_set(e, fam.elements, plan, seed=0)
        assert first == second

    def test_quota_met_for_every_witness(self):
        g = geom(40)
        e = random_set(g, F(1, 2), 4)
        plan = AugmentPlan(F(1, 2), F(1, 8))
        fam = witness_family(e, plan, INTERVALS)
        e_tilde, e_prime = augment_set(e, fam.elements, plan)
        density = plan.target_density
        for el in fam.elements:
            outside = el.cells(g).difference(e)
            if outside.is_empty:
                continue
            quota = -(-(density.numerator * outside.cell_count) // density.denominator)
            got = e_prime.intersect(outside).cell_count
            assert got >= quota

    def test_witness_below_threshold_rejected(self):
        g = geom(10)
        e = CellSet.from_cells(g, [0])
        bad = BasisElement((Box((5,), (10,)),))
        plan = AugmentPlan(F(1, 2), F(1, 8))
        with pytest.raises(ConfigError):
            augment_set(e, [bad], plan)

    def test_vacuous_witness_inside_e(self):
        g = geom(10)
        e = CellSet.from_cells(g, range(10))
        witness = BasisElement((Box((2,), (5,)),))
        plan = AugmentPlan(F(1, 2), F(1, 8))
        e_tilde, e_prime = augment_set(e, [witness], plan)
        assert e_prime.is_empty
        assert e_tilde == e

    def test_zero_density_plan_adds_nothing(self):
        g = geom(12)
        e = CellSet.from_cells(g, range(6))
        plan = AugmentPlan(F(1, 2), F(1, 1000000))
        fam = witness_family(e, plan, INTERVALS)
        e_tilde, e_prime = augment_set(e, fam.elements, plan)
        # quotas of ceil(tiny * small) are still 1 for nonempty outsides,
        # so only witnesses fully inside E contribute nothing
        for el in fam.elements:
            outside = el.cells(g).difference(e)
            if outside.is_empty:
                continue
            assert e_prime.intersect(outside).cell_count >= 1


class TestLemmaChainReport:
    def build(self, n, seed, alpha, eps):
        g = geom(n)
        e = random_set(g, F(1, 2), seed)
        plan = AugmentPlan(alpha, eps)
        fam = witness_family(e, plan, INTERVALS)
        e_tilde, _ = augment_set(e, fam.elements, plan)
        return lemma_chain_report(e, e_tilde, fam.elements, plan, INTERVALS)

    def test_every_witness_lifted_to_alpha(self):
        rep = self.build(48, 2, F(3, 4), F(1, 32))
        assert rep.witness_count == len(rep.per_witness)
        for w in rep.per_witness:
            assert w.avg_after >= F(3, 4)
            assert w.passes

    def test_unaugmented_set_already_passing(self):
        g = geom(8)
        e = CellSet.full(g)
        plan = AugmentPlan(F(3, 4), F(1, 16))
        fam = witness_family(e, plan, INTERVALS)
        rep = lemma_chain_report(e, e, fam.elements, plan, INTERVALS)
        assert rep.all_witnesses_pass
        assert rep.size_pass
        assert rep.e_prime_cells == 0

    def test_strictness_classified(self):
        # witness [0,4) on E = {0,1,2}: avg 3/4 exactly meets alpha
        g = geom(4)
        e = CellSet.from_cells(g, [0, 1, 2])
        witness = BasisElement((Box((0,), (4,)),))
        plan = AugmentPlan(F(3, 4), F(1, 16))
        rep = lemma_chain_report(e, e, [witness], plan, INTERVALS)
        w = rep.per_witness[0]
        assert w.passes and not w.strict

    def test_requires_extension(self):
        g = geom(8)
        e = CellSet.from_cells(g, range(4))
        smaller = CellSet.from_cells(g, range(3))
        plan = AugmentPlan(F(1, 2), F(1, 8))
        witness = BasisElement((Box((0,), (4,)),))
        with pytest.raises(ConfigError):
            lemma_chain_report(e, smaller, [witness], plan, INTERVALS)

    def test_superlevel_bound_recorded(self):
        rep = self.build(32, 5, F(1, 2), F(1, 8))
        # strict alpha-superlevel of M chi_Etilde covers the witness union
        assert rep.superlevel_lhs >= rep.superlevel_rhs
        assert rep.superlevel_pass


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.sampled_from([F(1, 2), F(3, 4)]))
def test_augmentation_lifts_every_witness(seed, alpha):
    eps = (1 - alpha) / 8
    g = geom(24)
    e = random_set(g, F(1, 2), seed)
    if e.is_empty:
        return
    plan = AugmentPlan(alpha, eps)
    try:
        fam = witness_family(e, plan, INTERVALS)
    except EmptyWitnessFamilyError:
        return
    e_tilde, _ = augment_set(e, fam.elements, plan)
    for el in fam.elements:
        assert average(el, e_tilde) >= alpha
