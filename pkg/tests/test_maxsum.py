"""Tests for max-sum message passing over D-fold networks."""

import pytest

from alohacalc.core.algebra import VerificationBox, equal_on
from alohacalc.core.maxsum import (
    EnumerationLimitError,
    MaxSumEvaluator,
    build_success_table,
    enumerate_classes,
    max_sum_decode,
    max_sum_trace,
)
from alohacalc.core.receivers import dfold_network
from alohacalc.core.topology import BipartiteTopology


class TestMaxSumDecode:
    """Test the message-passing decoder."""

    def test_golden_table(self, table1_topology, table1_rows):
        assert len(table1_rows) == 64
        for load, decoded in table1_rows.items():
            assert max_sum_decode(table1_topology, 2, load) == decoded, load

    def test_needs_second_pass(self, table1_topology):
        # Receiver 2 decodes class 2 and the shared class, which frees receiver 1.
        trace = max_sum_trace(table1_topology, 2, (2, 1, 1))
        assert trace[0].residual == (2, 1, 1)
        assert trace[1].residual == (2, 0, 0)
        assert trace[2].residual == (0, 0, 0)
        assert trace[-1].iteration == len(trace) - 1

    def test_messages_of_first_pass(self, table1_topology):
        state = max_sum_trace(table1_topology, 2, (3, 1, 1))[1]
        assert state.class_to_receiver == {(0, 0): 3, (1, 1): 1, (2, 0): 1, (2, 1): 1}
        assert state.receiver_to_class == {(0, 0): 0, (1, 1): 1, (2, 0): 0, (2, 1): 1}

    def test_idle_classes_send_nothing(self, table1_topology):
        state = max_sum_trace(table1_topology, 2, (0, 1, 0))[1]
        assert state.class_to_receiver == {(1, 1): 1}

    def test_stops_after_pass_without_decodes(self, table1_topology):
        trace = max_sum_trace(table1_topology, 2, (3, 3, 3))
        assert len(trace) == 2
        assert trace[-1].residual == (3, 3, 3)

    def test_rejects_zero_capacity(self, table1_topology):
        with pytest.raises(ValueError, match="D >= 1"):
            max_sum_decode(table1_topology, 0, (1, 1, 1))


class TestSuccessTable:
    """Test the saturating table over the equivalence classes."""

    def test_enumeration_order(self):
        loads = list(enumerate_classes(2, 1))
        assert len(loads) == 9
        assert loads[:4] == [(0, 0), (0, 1), (0, 2), (1, 0)]

    def test_enumeration_limit(self):
        with pytest.raises(EnumerationLimitError, match="exceed the limit"):
            enumerate_classes(10, 2, limit=1000)

    def test_table_matches_golden(self, table1_topology, table1_rows):
        table = build_success_table(table1_topology, 2)
        assert table.cap == (3, 3, 3)
        assert table.saturating
        assert dict(table.rows()) == table1_rows
        assert table.all_or_nothing

    def test_table_clamps(self, table1_topology):
        table = build_success_table(table1_topology, 2)
        assert table((7, 1, 1)) == (0, 1, 1)
        assert table((7, 1, 1)) == max_sum_decode(table1_topology, 2, (7, 1, 1))

    def test_three_paths_agree(self, table1_topology):
        box = VerificationBox((4, 4, 4))
        table = build_success_table(table1_topology, 2)
        lazy = MaxSumEvaluator(table1_topology, 2)
        algebra = dfold_network(table1_topology, 2)
        assert equal_on(table, lazy, box)
        assert equal_on(lazy, algebra, box)

    @pytest.mark.parametrize("D", [1, 3])
    def test_other_capacities_agree_with_algebra(self, D):
        topology = BipartiteTopology(((1, 0, 0), (1, 1, 0), (0, 1, 1), (0, 0, 1)))
        box = VerificationBox.cube(4, D + 1)
        assert equal_on(MaxSumEvaluator(topology, D), dfold_network(topology, D), box)
