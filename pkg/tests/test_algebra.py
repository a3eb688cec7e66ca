"""Tests for the success-function algebra."""

from concurrent.futures import ThreadPoolExecutor

import pytest

from alohacalc.core.algebra import (
    ContractivityError,
    DimensionError,
    DomainError,
    FunctionEvaluator,
    VerificationBox,
    as_load,
    closure,
    closure_trace,
    complement,
    compose,
    equal_on,
    identity,
    is_star_shaped,
    leq,
    minimum,
    parallel,
    star_threshold,
    verify_properties,
    zero,
)
from alohacalc.core.receivers import d_fold, near_far, slotted_aloha


def odd_decoder():
    """Decodes one packet at loads 1 and 3, nothing otherwise."""
    return FunctionEvaluator(1, lambda n: (1,) if n[0] in (1, 3) else (0,), "odd")


def star_function():
    """min(n, max(0, 2n - 3)): star-shaped with threshold 3."""
    return FunctionEvaluator(1, lambda n: (min(n[0], max(0, 2 * n[0] - 3)),), "star")


class TestLoads:
    """Test load validation."""

    def test_as_load_accepts_integral_values(self):
        assert as_load([1, 2.0, 0]) == (1, 2, 0)

    def test_as_load_rejects_negative(self):
        with pytest.raises(DomainError, match="non-negative"):
            as_load([1, -1])

    def test_as_load_rejects_fractional(self):
        with pytest.raises(DomainError, match="integers"):
            as_load([1.5])

    def test_as_load_rejects_wrong_dimension(self):
        with pytest.raises(DimensionError):
            as_load([1, 2], dimension=3)

    def test_as_load_rejects_empty(self):
        with pytest.raises(DimensionError):
            as_load([])


class TestEvaluate:
    """Test evaluation and its contract checks."""

    def test_dfold_within_capacity(self):
        assert d_fold(2)((1,)) == (1,)

    def test_zero_load_decodes_nothing(self):
        for f in (slotted_aloha(), d_fold(3), near_far(), identity(3)):
            assert f((0,) * f.dimension) == (0,) * f.dimension

    def test_near_far(self):
        f = near_far()
        assert f((1, 1)) == (1, 1)
        assert f((2, 1)) == (0, 0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            slotted_aloha()((1, 1))

    def test_contractivity_is_enforced(self):
        greedy = FunctionEvaluator(1, lambda n: (n[0] + 1,), "greedy")
        with pytest.raises(ContractivityError, match="greedy"):
            greedy((2,))

    def test_evaluation_is_deterministic(self):
        f = closure(complement(odd_decoder()))
        assert f((5,)) == f((5,))

    def test_invalid_dimension(self):
        with pytest.raises(DimensionError):
            FunctionEvaluator(0, lambda n: n)


class TestComplement:
    """Test f^c(n) = n - f(n)."""

    def test_slotted_aloha(self):
        sa_c = complement(slotted_aloha())
        assert sa_c((1,)) == (0,)
        assert sa_c((3,)) == (3,)

    def test_dfold(self):
        f = complement(d_fold(2))
        assert f((2,)) == (0,)
        assert f((3,)) == (3,)

    def test_involution_returns_original(self):
        f = d_fold(2)
        assert complement(complement(f)) is f

    def test_zero_is_complement_of_identity(self):
        assert equal_on(complement(identity(2)), zero(2), VerificationBox((3, 3)))


class TestMinimumAndCompose:
    """Test the two binary operations."""

    def test_minimum_with_identity(self):
        g = d_fold(2)
        assert equal_on(minimum(identity(1), g), g, VerificationBox((5,)))

    def test_minimum_is_idempotent(self):
        f = complement(odd_decoder())
        assert equal_on(minimum(f, f), f, VerificationBox((5,)))

    def test_minimum_of_failures(self):
        f = minimum(complement(slotted_aloha()), complement(d_fold(2)))
        assert f((2,)) == (0,)

    def test_compose_failures(self):
        sa_c = complement(slotted_aloha())
        f = compose(sa_c, sa_c)
        assert f((2,)) == (2,)
        assert f((1,)) == (0,)

    def test_compose_with_identity(self):
        f = complement(odd_decoder())
        box = VerificationBox((6,))
        assert equal_on(compose(f, identity(1)), f, box)
        assert equal_on(compose(identity(1), f), f, box)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            minimum(slotted_aloha(), near_far())
        with pytest.raises(DimensionError):
            compose(slotted_aloha(), near_far())


class TestClosure:
    """Test f*(n), the fixed point of iterating f."""

    def test_fixed_point_of_complement(self):
        f = closure(complement(odd_decoder()))
        assert f((3,)) == (2,)

    def test_star_shaped_threshold(self):
        f = star_function()
        box = VerificationBox((10,))
        assert is_star_shaped(f, box)
        assert star_threshold(f, box) == 3
        f_star = closure(f)
        for n in range(11):
            assert f_star((n,)) == ((0,) if n < 3 else (n,))

    def test_identity_is_its_own_closure(self):
        assert equal_on(closure(identity(2)), identity(2), VerificationBox((3, 3)))

    def test_trace_ends_at_fixed_point(self):
        f = complement(odd_decoder())
        trace = closure_trace(f, (3,))
        assert trace == [(3,), (2,)]
        assert f(trace[-1]) == trace[-1]

    def test_trace_length_bound(self):
        f = FunctionEvaluator(1, lambda n: (max(n[0] - 1, 0),), "decrement")
        trace = closure_trace(f, (7,))
        assert trace[-1] == (0,)
        assert len(trace) - 1 <= 1 + 7

    def test_shared_across_threads(self):
        f = closure(compose(complement(d_fold(2)), complement(odd_decoder())))
        loads = [(n,) for n in range(12)] * 8
        with ThreadPoolExecutor(max_workers=4) as pool:
            results = list(pool.map(f, loads))
        assert results == [f(load) for load in loads]


class TestParallel:
    """Test receivers stacked side by side."""

    def test_two_slotted_aloha(self):
        assert parallel(slotted_aloha(), slotted_aloha())((1, 1)) == (1, 1)

    def test_second_block_idle(self):
        f = parallel(d_fold(3), near_far())
        assert f((2, 0, 0)) == (2, 0, 0)

    def test_independent_blocks(self):
        f = parallel(d_fold(2), slotted_aloha())
        assert f.dimension == 2
        assert f((2, 2)) == (2, 0)

    def test_flags_are_conjunction(self):
        assert parallel(d_fold(2), slotted_aloha()).all_or_nothing
        assert not parallel(d_fold(2), odd_decoder()).all_or_nothing


class TestVerificationBox:
    """Test the finite enumeration domain."""

    def test_size_and_order(self):
        box = VerificationBox((1, 2))
        assert box.size == 6
        assert list(box.loads()) == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]

    def test_cube(self):
        box = VerificationBox.cube(3, 2)
        assert box.upper == (2, 2, 2)
        assert box.size == 27

    def test_contains(self):
        box = VerificationBox((2, 2))
        assert box.contains((2, 0))
        assert not box.contains((3, 0))
        assert not box.contains((1,))


class TestVerifyProperties:
    """Test exhaustive property checks."""

    def test_dfold(self):
        report = verify_properties(d_fold(2), VerificationBox((5,)))
        assert report.contractive
        assert report.monotone_failure
        assert report.all_or_nothing
        assert not report.violations

    def test_slotted_aloha(self):
        report = verify_properties(slotted_aloha(), VerificationBox((4,)))
        assert report.contractive and report.monotone_failure and report.all_or_nothing

    def test_partial_decoder_is_not_all_or_nothing(self):
        f = odd_decoder()
        report = verify_properties(f, VerificationBox((4,)))
        assert report.contractive
        # Failures 0, 0, 2, 2, 4 never decrease.
        assert report.monotone_failure
        assert not report.all_or_nothing
        assert "all_or_nothing" in report.violations

    def test_sets_flags_on_success(self):
        f = FunctionEvaluator(1, lambda n: n if n[0] <= 2 else (0,), "two")
        assert not f.all_or_nothing
        verify_properties(f, VerificationBox((4,)))
        assert f.monotone_failure
        assert f.all_or_nothing

    def test_partial_decoder_gets_monotone_flag_only(self):
        f = odd_decoder()
        verify_properties(f, VerificationBox((4,)))
        assert f.monotone_failure
        assert not f.all_or_nothing

    def test_larger_box_clears_flag(self):
        """Test that a failure on a larger box clears a flag set on a smaller one."""
        f = FunctionEvaluator(1, lambda n: (1,) if n[0] in (1, 3) else (0,), "odd")
        assert verify_properties(f, VerificationBox((2,))).all_or_nothing
        assert f.all_or_nothing

        report = verify_properties(f, VerificationBox((4,)))
        assert not report.all_or_nothing
        assert not f.all_or_nothing
        assert f.monotone_failure

    def test_non_monotone_failure(self):
        f = FunctionEvaluator(1, lambda n: n if n[0] == 2 else (0,), "only-two")
        report = verify_properties(f, VerificationBox((3,)))
        assert not report.monotone_failure
        assert report.violations["monotone_failure"].loads == ((1,), (2,))
        assert not f.monotone_failure

    def test_not_contractive(self):
        greedy = FunctionEvaluator(1, lambda n: (n[0] + 1,), "greedy")
        report = verify_properties(greedy, VerificationBox((2,)))
        assert not report.contractive
        assert not report.monotone_failure
        assert not greedy.all_or_nothing

    def test_on_off_violation(self):
        # Class 1 decodes alone at (1, 0), is lost at (1, 1) and comes back at (1, 2).
        def rule(n):
            if n[1] == 1:
                return (0, 0)
            return n

        f = FunctionEvaluator(2, rule, "flicker")
        report = verify_properties(f, VerificationBox((1, 2)))
        assert not report.all_or_nothing

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            verify_properties(slotted_aloha(), VerificationBox((2, 2)))


class TestOrder:
    """Test pointwise comparisons."""

    def test_leq(self):
        box = VerificationBox((5,))
        assert leq(slotted_aloha(), d_fold(2), box)
        assert not leq(d_fold(2), slotted_aloha(), box)

    def test_single_class_only(self):
        box = VerificationBox((2, 2))
        with pytest.raises(DimensionError):
            is_star_shaped(near_far(), box)
        with pytest.raises(DimensionError):
            star_threshold(near_far(), box)
