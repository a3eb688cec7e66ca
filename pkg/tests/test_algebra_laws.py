"""Algebraic laws of minimum, composition, closure and complement on random tables."""

import pytest
from hypothesis import HealthCheck, given, settings

from alohacalc.core.algebra import (
    VerificationBox,
    closure,
    closure_trace,
    complement,
    compose,
    equal_on,
    identity,
    leq,
    load_leq,
    minimum,
    parallel,
    verify_properties,
)
from tests.helpers.strategies import LARGE_BOX, contractive_families, monotone_families


def is_contractive(f, box):
    return all(load_leq(f(load), load) for load in box.loads())


def is_monotone(f, box):
    return all(
        load_leq(f(a), f(b)) for a in box.loads() for b in box.loads() if load_leq(a, b)
    )


class TestContractivity:
    """Every operation keeps f(n) <= n."""

    @given(contractive_families(count=2))
    def test_operations_stay_contractive(self, family):
        box, f, g = family
        for h in (complement(f), minimum(f, g), compose(f, g), closure(f)):
            assert is_contractive(h, box)

    @given(contractive_families(count=2, max_dimension=2))
    def test_parallel_stays_contractive(self, family):
        box, f, g = family
        h = parallel(f, g)
        assert verify_properties(h, VerificationBox(box.upper + box.upper)).contractive

    @given(contractive_families(count=1))
    def test_complement_is_involution(self, family):
        box, f = family
        assert equal_on(complement(complement(f)), f, box)

    @given(contractive_families(count=1))
    def test_closure_terminates_within_bound(self, family):
        box, f = family
        for load in box.loads():
            assert len(closure_trace(f, load)) - 1 <= 1 + sum(load)


class TestMonoidLaws:
    """Identity, commutativity and associativity of the two operations."""

    @given(contractive_families(count=1))
    def test_identity(self, family):
        box, f = family
        eps = identity(box.dimension)
        assert equal_on(minimum(f, eps), f, box)
        assert equal_on(compose(f, eps), f, box)
        assert equal_on(compose(eps, f), f, box)

    @given(contractive_families(count=2))
    def test_minimum_commutes(self, family):
        box, f, g = family
        assert equal_on(minimum(f, g), minimum(g, f), box)

    @given(contractive_families(count=3))
    def test_associativity(self, family):
        box, f, g, h = family
        assert equal_on(minimum(minimum(f, g), h), minimum(f, minimum(g, h)), box)
        assert equal_on(compose(compose(f, g), h), compose(f, compose(g, h)), box)


class TestMonotoneFunctions:
    """Operations on non-decreasing functions."""

    @given(monotone_families(count=2))
    def test_minimum_and_compose_stay_monotone(self, family):
        box, f, g = family
        assert is_monotone(minimum(f, g), box)
        assert is_monotone(compose(f, g), box)

    @given(monotone_families(count=3))
    def test_operations_respect_order(self, family):
        box, f2, g2, h = family
        f1 = minimum(f2, h)
        g1 = minimum(g2, h)
        assert leq(minimum(f1, g1), minimum(f2, g2), box)
        assert leq(compose(f1, g1), compose(f2, g2), box)

    @given(monotone_families(count=2))
    def test_closure_respects_order(self, family):
        box, f, h = family
        smaller = minimum(f, h)
        assert leq(closure(smaller), closure(f), box)


class TestClosureLaws:
    """Fixed-point laws of the closure for non-decreasing functions."""

    @given(monotone_families(count=1))
    def test_closure_absorbs_function(self, family):
        box, f = family
        f_star = closure(f)
        assert equal_on(compose(f, f_star), f_star, box)
        assert equal_on(compose(f_star, f), f_star, box)

    @given(monotone_families(count=1))
    def test_closure_is_idempotent(self, family):
        box, f = family
        f_star = closure(f)
        assert equal_on(compose(f_star, f_star), f_star, box)
        assert equal_on(closure(f_star), f_star, box)

    @given(monotone_families(count=2))
    def test_closure_of_composition_is_symmetric(self, family):
        box, f, g = family
        assert equal_on(closure(compose(f, g)), closure(compose(g, f)), box)

    @given(monotone_families(count=2))
    def test_closure_of_composition_of_closures(self, family):
        box, f, g = family
        lhs = closure(compose(f, g))
        assert equal_on(lhs, closure(compose(closure(f), closure(g))), box)

    @given(monotone_families(count=2))
    def test_closure_of_composition_equals_closure_of_minimum(self, family):
        box, f, g = family
        assert equal_on(closure(compose(f, g)), closure(minimum(f, g)), box)

    @given(monotone_families(count=1))
    def test_closure_is_monotone(self, family):
        box, f = family
        assert is_monotone(closure(f), box)


@pytest.mark.slow
class TestLawsOnLargeBox:
    """The laws above on the full three-class box up to (4, 4, 4)."""

    @settings(max_examples=25, suppress_health_check=[HealthCheck.too_slow])
    @given(contractive_families(count=3, box=LARGE_BOX))
    def test_contractive_laws(self, family):
        box, f, g, h = family
        for op in (complement(f), minimum(f, g), compose(f, g), closure(f)):
            assert is_contractive(op, box)
        assert equal_on(complement(complement(f)), f, box)
        assert equal_on(minimum(f, g), minimum(g, f), box)
        assert equal_on(compose(compose(f, g), h), compose(f, compose(g, h)), box)

    @settings(max_examples=25, suppress_health_check=[HealthCheck.too_slow])
    @given(monotone_families(count=2, box=LARGE_BOX))
    def test_closure_laws(self, family):
        box, f, g = family
        f_star = closure(f)
        assert is_monotone(f_star, box)
        assert equal_on(compose(f, f_star), f_star, box)
        assert equal_on(compose(f_star, f_star), f_star, box)
        assert equal_on(closure(compose(f, g)), closure(minimum(f, g)), box)
        assert equal_on(closure(compose(f, g)), closure(compose(g, f)), box)
        assert leq(closure(minimum(f, g)), f_star, box)

    @settings(max_examples=25, suppress_health_check=[HealthCheck.too_slow])
    @given(monotone_families(count=1, box=LARGE_BOX))
    def test_verification_finds_monotone_failure(self, family):
        box, f = family
        report = verify_properties(f, box)
        assert report.contractive
        assert report.monotone_failure == is_monotone(complement(f), box)
