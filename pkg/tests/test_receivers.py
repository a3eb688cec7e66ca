"""Tests for canonical receivers and their compositions."""

import pytest
from hypothesis import given

from alohacalc.core.algebra import (
    DimensionError,
    FunctionEvaluator,
    VerificationBox,
    complement,
    equal_on,
    leq,
    parallel,
    verify_properties,
    zero,
)
from alohacalc.core.receivers import (
    PropertyNotVerifiedError,
    cooperative,
    cooperative_many,
    d_fold,
    dfold_network,
    multiplex,
    multiplexed_dfold,
    near_far,
    packet_code,
    parallel_many,
    slotted_aloha,
    tandem,
)
from alohacalc.core.topology import BipartiteTopology, TopologyError
from tests.helpers.strategies import monotone_families


def odd_decoder():
    """Decodes one packet at loads 1 and 3: monotone failure, not all-or-nothing."""
    f = FunctionEvaluator(1, lambda n: (1,) if n[0] in (1, 3) else (0,), "odd")
    verify_properties(f, VerificationBox((6,)))
    return f


class TestCanonicalReceivers:
    """Test slotted ALOHA, D-fold and near-far."""

    def test_slotted_aloha(self):
        sa = slotted_aloha()
        assert sa((0,)) == (0,)
        assert sa((1,)) == (1,)
        assert sa((2,)) == (0,)

    def test_dfold(self):
        f = d_fold(2)
        assert f((2,)) == (2,)
        assert f((3,)) == (0,)

    def test_one_fold_is_slotted_aloha(self):
        assert equal_on(d_fold(1), slotted_aloha(), VerificationBox((4,)))

    def test_dfold_rejects_zero(self):
        with pytest.raises(ValueError, match="D >= 1"):
            d_fold(0)

    def test_near_far(self):
        f = near_far()
        assert f((1, 1)) == (1, 1)
        assert f((0, 1)) == (0, 1)
        assert f((1, 2)) == (0, 0)

    def test_canonical_receivers_are_flagged(self):
        for f in (slotted_aloha(), d_fold(3), near_far()):
            assert f.all_or_nothing and f.monotone_failure


class TestTandem:
    """Test one-way SIC between two receivers."""

    def test_slotted_aloha_pair(self):
        f = tandem(slotted_aloha(), slotted_aloha())
        assert f((1,)) == (1,)
        assert f((2,)) == (0,)

    def test_idle_second_receiver(self):
        f = d_fold(2)
        assert equal_on(tandem(f, zero(1)), f, VerificationBox((5,)))

    def test_decodes_at_least_first_receiver(self):
        box = VerificationBox((6,))
        assert leq(d_fold(2), tandem(d_fold(2), odd_decoder()), box)

    def test_residual_form(self):
        phi, psi = d_fold(2), odd_decoder()
        f = tandem(phi, psi)
        for (n,) in VerificationBox((6,)).loads():
            first = phi((n,))[0]
            assert f((n,))[0] == first + psi((n - first,))[0]


class TestCooperative:
    """Test two-way SIC between two receivers."""

    def test_partial_decoder_pair(self):
        f = odd_decoder()
        assert cooperative(f, f)((3,)) == (1,)

    def test_slotted_aloha_pair(self):
        assert cooperative(slotted_aloha(), slotted_aloha())((1,)) == (1,)

    def test_dominates_tandem(self):
        box = VerificationBox((6,))
        phi, psi = d_fold(2), odd_decoder()
        assert leq(tandem(phi, psi), cooperative(phi, psi), box)

    def test_monotone_flag_propagates(self):
        assert cooperative(d_fold(2), odd_decoder()).monotone_failure

    @given(monotone_families(count=2))
    def test_order_invariance(self, family):
        box, f, g = family
        phi, psi = complement(f), complement(g)
        assert equal_on(cooperative(phi, psi), cooperative(psi, phi), box)
        assert verify_properties(cooperative(phi, psi), box).monotone_failure

    def test_many_needs_two(self):
        with pytest.raises(ValueError, match="at least two"):
            cooperative_many([d_fold(2)])

    def test_many_order_invariance(self):
        receivers = [d_fold(2), odd_decoder(), d_fold(1)]
        box = VerificationBox((8,))
        forward = cooperative_many(receivers)
        backward = cooperative_many(receivers[::-1])
        assert equal_on(forward, backward, box)


class TestMultiplex:
    """Test traffic multiplexing into an all-or-nothing receiver."""

    def test_shared_dfold(self):
        f = multiplexed_dfold(3, 2)
        assert f((1, 1, 0)) == (1, 1, 0)
        assert f((1, 1, 1)) == (0, 0, 0)
        assert f((0, 0, 0)) == (0, 0, 0)

    def test_empty_row_never_decodes(self):
        f = multiplex(d_fold(2), BipartiteTopology(((1,), (0,))))
        assert f((1, 1)) == (1, 0)

    def test_output_is_all_or_nothing(self):
        f = multiplex(parallel(d_fold(2), slotted_aloha()), BipartiteTopology(((1, 0), (1, 0), (0, 1))))
        assert f.all_or_nothing
        report = verify_properties(f, VerificationBox((3, 3, 3)))
        assert report.all_or_nothing and report.monotone_failure

    def test_rejects_coding_matrix(self):
        with pytest.raises(TopologyError, match="multiplexing"):
            multiplex(parallel(d_fold(2), d_fold(2)), BipartiteTopology(((1, 1),)))

    def test_rejects_unverified_receiver(self):
        with pytest.raises(PropertyNotVerifiedError):
            multiplex(odd_decoder(), BipartiteTopology(((1,),)))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            multiplex(d_fold(2), BipartiteTopology(((1, 0),)))


class TestPacketCode:
    """Test multicast of each class to disjoint receivers."""

    def test_equals_cooperative_for_concatenated_identity(self):
        f, g = near_far(), multiplexed_dfold(2, 2)
        h = BipartiteTopology(((1, 0, 1, 0), (0, 1, 0, 1)))
        coded = packet_code(parallel(f, g), h)
        assert equal_on(coded, cooperative(f, g), VerificationBox((4, 4)))

    def test_empty_row_never_decodes(self):
        f = packet_code(d_fold(2), BipartiteTopology(((1,), (0,))))
        assert f((2, 3)) == (2, 0)

    def test_rejects_partial_decoder(self):
        # Copies of a packet are not interchangeable for partial decoders.
        h = BipartiteTopology(((1, 1),))
        with pytest.raises(PropertyNotVerifiedError, match="all-or-nothing"):
            packet_code(parallel(odd_decoder(), odd_decoder()), h)

    def test_rejects_decoder_refuted_on_larger_box(self):
        f = FunctionEvaluator(1, lambda n: (1,) if n[0] in (1, 3) else (0,), "odd")
        verify_properties(f, VerificationBox((2,)))
        packet_code(f, BipartiteTopology(((1,),)))

        verify_properties(f, VerificationBox((4,)))
        with pytest.raises(PropertyNotVerifiedError, match="all-or-nothing"):
            packet_code(f, BipartiteTopology(((1,),)))
        with pytest.raises(PropertyNotVerifiedError):
            multiplex(f, BipartiteTopology(((1,),)))

    def test_rejects_multiplexing_matrix(self):
        with pytest.raises(TopologyError, match="coding"):
            packet_code(d_fold(2), BipartiteTopology(((1,), (1,))))

    def test_output_is_all_or_nothing(self):
        f = packet_code(parallel_many([d_fold(2), d_fold(1), slotted_aloha()]),
                        BipartiteTopology(((1, 1, 0), (0, 0, 1))))
        report = verify_properties(f, VerificationBox((4, 4)))
        assert report.all_or_nothing


class TestDfoldNetwork:
    """Test cooperative D-fold receivers on an arbitrary topology."""

    def test_matches_golden_table(self, table1_topology, table1_rows):
        f = dfold_network(table1_topology, 2)
        for load, decoded in table1_rows.items():
            assert f(load) == decoded, load

    def test_spot_rows(self, table1_topology):
        f = dfold_network(table1_topology, 2)
        assert f((0, 1, 2)) == (0, 1, 2)
        assert f((1, 3, 1)) == (1, 0, 1)
        assert f((3, 1, 1)) == (0, 1, 1)

    def test_single_receiver(self):
        f = dfold_network(BipartiteTopology(((1,), (1,))), 2)
        assert equal_on(f, multiplexed_dfold(2, 2), VerificationBox((4, 4)))

    def test_no_edges(self):
        f = dfold_network(BipartiteTopology(((0, 0), (0, 0))), 2)
        assert f((1, 1)) == (0, 0)

    def test_parallel_many_needs_input(self):
        with pytest.raises(ValueError):
            parallel_many([])
