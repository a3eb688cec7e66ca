"""
Max-sum message passing for cooperative D-fold receivers.

Classes send their residual packet counts to the receivers they are
connected to; a receiver whose total is within D returns every message, any
other receiver returns 0. A class whose packets came back from at least one
receiver is decoded and leaves the network, freeing capacity for the next
pass. Passes continue until nothing more decodes.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator

from .algebra import Load, SuccessEvaluator, VerificationBox, as_load, verify_properties
from .tables import TableEvaluator
from .topology import BipartiteTopology

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_LIMIT = 10**7


class EnumerationLimitError(ValueError):
    """Raised when a success table would need more loads than the configured limit."""

    pass


@dataclass(frozen=True)
class MaxSumState:
    """
    One pass of the message-passing decoder.

    Attributes:
        iteration: Pass index (0 is the initial state, before any messages)
        residual: Packets per class not yet decoded after this pass
        class_to_receiver: Per edge (k, t), 0-based, the count class k sent
        receiver_to_class: Per edge (k, t), the count receiver t returned
    """

    iteration: int
    residual: Load
    class_to_receiver: dict[tuple[int, int], int]
    receiver_to_class: dict[tuple[int, int], int]


def _check_d(D: int) -> None:
    if D < 1:
        raise ValueError(f"D-fold receivers need D >= 1, got {D}")


def max_sum_trace(topology: BipartiteTopology, D: int, n: Iterable[int]) -> list[MaxSumState]:
    """
    Run the decoder and keep every pass.

    Classes with no residual packets neither send messages nor take part in
    the stopping test.

    Returns:
        States from iteration 0 to the final pass (the one in which nothing decoded)
    """
    _check_d(D)
    residual = as_load(n, topology.classes)
    states = [MaxSumState(0, residual, {}, {})]
    bound = sum(residual) + 1

    for iteration in range(1, bound + 1):
        outgoing = {
            (k, t): residual[k]
            for k, row in enumerate(topology.row_sets)
            if residual[k] > 0
            for t in row
        }

        returned: dict[tuple[int, int], int] = {}
        for t, column in enumerate(topology.column_sets):
            senders = [k for k in column if (k, t) in outgoing]
            total = sum(outgoing[(k, t)] for k in senders)
            for k in senders:
                returned[(k, t)] = outgoing[(k, t)] if total <= D else 0

        decoded = [
            k
            for k, row in enumerate(topology.row_sets)
            if residual[k] > 0 and max((returned[(k, t)] for t in row), default=0) > 0
        ]
        if decoded:
            residual = tuple(0 if k in decoded else r for k, r in enumerate(residual))
        states.append(MaxSumState(iteration, residual, outgoing, returned))
        logger.debug("max-sum pass %d decoded classes %s, residual %s", iteration, decoded, residual)

        if not decoded:
            break

    return states


def max_sum_decode(topology: BipartiteTopology, D: int, n: Iterable[int]) -> Load:
    """
    Number of packets decoded per class by T cooperative D-fold receivers.

    Args:
        topology: K x T bi-adjacency matrix
        D: Receiver capacity
        n: Packets per class

    Returns:
        phi(n) = n - residual after the last pass
    """
    load = as_load(n, topology.classes)
    final = max_sum_trace(topology, D, load)[-1].residual
    return tuple(a - b for a, b in zip(load, final))


def enumerate_classes(classes: int, D: int, limit: int = DEFAULT_ENUMERATION_LIMIT) -> Iterator[Load]:
    """
    All loads with every entry in 0..D+1, in lexicographic order.

    A class with more than D+1 packets can never be decoded by any of its
    receivers and blocks them exactly as D+1 packets would, so these
    (D+2)^K loads represent every load.

    Raises:
        EnumerationLimitError: If (D+2)^K exceeds `limit`
    """
    _check_d(D)
    if classes < 1:
        raise ValueError(f"Need at least one class, got {classes}")
    count = (D + 2) ** classes
    if count > limit:
        raise EnumerationLimitError(
            f"{count} equivalence classes for K={classes}, D={D} exceed the limit of {limit}; "
            "use MaxSumEvaluator instead of a table"
        )
    return itertools.product(range(D + 2), repeat=classes)


def build_success_table(
    topology: BipartiteTopology, D: int, limit: int = DEFAULT_ENUMERATION_LIMIT
) -> TableEvaluator:
    """
    Tabulate max_sum_decode over the equivalence classes.

    The table saturates at D+1 per class and its all-or-nothing and monotone
    flags are checked over the whole box before it is returned.
    """
    loads = list(enumerate_classes(topology.classes, D, limit))
    logger.info("Building %d-row success table for K=%d, D=%d", len(loads), topology.classes, D)
    table = {load: max_sum_decode(topology, D, load) for load in loads}
    evaluator = TableEvaluator(
        table, (D + 1,) * topology.classes, saturating=True, name=f"maxsum-D{D}"
    )
    report = verify_properties(evaluator, VerificationBox(evaluator.cap))
    if report.violations:
        logger.warning("Success table properties failed: %s", sorted(report.violations))
    return evaluator


class MaxSumEvaluator(SuccessEvaluator):
    """Lazy success function of a D-fold network, valid for every load."""

    def __init__(self, topology: BipartiteTopology, D: int):
        _check_d(D)
        super().__init__(topology.classes, f"maxsum-D{D}")
        self.topology = topology
        self.D = D
        self.mark(all_or_nothing=True)

    def _evaluate(self, load: Load) -> Load:
        return max_sum_decode(self.topology, self.D, load)
