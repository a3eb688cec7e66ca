"""
Canonical ALOHA receivers and the network combinators as evaluator transforms.

Every function here returns a lazy SuccessEvaluator. Receivers whose
properties hold for every load (slotted ALOHA, D-fold, near-far, and the
outputs of multiplexing and packet coding) are returned already flagged.
"""

import logging
from functools import reduce
from typing import Sequence

from .algebra import (
    DimensionError,
    FunctionEvaluator,
    Load,
    SuccessEvaluator,
    closure,
    complement,
    compose,
    parallel,
    zero,
)
from .topology import BipartiteTopology, TopologyError, split_bipartite

logger = logging.getLogger(__name__)


class PropertyNotVerifiedError(ValueError):
    """Raised when a combinator's precondition has not been established for an input."""

    pass


def slotted_aloha() -> SuccessEvaluator:
    """Decode a lone packet; any collision loses everything."""
    evaluator = FunctionEvaluator(1, lambda n: (1,) if n[0] == 1 else (0,), "SA")
    return evaluator.mark(all_or_nothing=True)


def d_fold(D: int) -> SuccessEvaluator:
    """
    Decode all packets when at most D are present, none otherwise.

    Raises:
        ValueError: If D < 1
    """
    if D < 1:
        raise ValueError(f"D-fold receivers need D >= 1, got {D}")
    evaluator = FunctionEvaluator(1, lambda n: n if n[0] <= D else (0,), f"{D}-fold")
    return evaluator.mark(all_or_nothing=True)


def near_far() -> SuccessEvaluator:
    """Two classes; both decode when at most one packet of each is present."""

    def rule(n: Load) -> Load:
        return n if n[0] <= 1 and n[1] <= 1 else (0, 0)

    return FunctionEvaluator(2, rule, "near-far").mark(all_or_nothing=True)


def tandem(phi: SuccessEvaluator, psi: SuccessEvaluator) -> SuccessEvaluator:
    """
    Receiver phi followed by receiver psi, with SIC forwarded one way only.

    zeta = (psi^c o phi^c)^c, i.e. zeta(n) = phi(n) + psi(n - phi(n)).
    """
    return complement(compose(complement(psi), complement(phi)))


def cooperative(phi: SuccessEvaluator, psi: SuccessEvaluator) -> SuccessEvaluator:
    """
    Two receivers exchanging decoded packets until neither decodes more.

    eta = ((psi^c o phi^c)*)^c. When both failure functions are monotone the
    result does not depend on which receiver decodes first and is itself
    monotone, so the flag is propagated.
    """
    result = complement(closure(compose(complement(psi), complement(phi))))
    if phi.monotone_failure and psi.monotone_failure:
        result.mark(monotone_failure=True)
    return result


def cooperative_many(receivers: Sequence[SuccessEvaluator]) -> SuccessEvaluator:
    """Left fold of pairwise `cooperative` over two or more receivers."""
    if len(receivers) < 2:
        raise ValueError("cooperative_many needs at least two receivers")
    return reduce(cooperative, receivers)


def _require_all_or_nothing(phi: SuccessEvaluator, operation: str) -> None:
    if not phi.all_or_nothing:
        raise PropertyNotVerifiedError(
            f"{operation} needs an all-or-nothing receiver; {phi.name} has not been verified "
            "(run verify_properties on a box first)"
        )


def _require_dimension(phi: SuccessEvaluator, topology: BipartiteTopology) -> None:
    if phi.dimension != topology.receivers:
        raise DimensionError(
            f"{phi.name} has {phi.dimension} classes but the topology has "
            f"{topology.receivers} internal classes"
        )


class MultiplexEvaluator(SuccessEvaluator):
    """psi_k(n) = n_k if sum_t H_kt phi_t(nH) > 0 else 0."""

    def __init__(self, phi: SuccessEvaluator, topology: BipartiteTopology):
        super().__init__(topology.classes, f"mux[{phi.name}]")
        self.phi = phi
        self.topology = topology

    def _evaluate(self, load: Load) -> Load:
        internal = self.phi.evaluate(self.topology.map_load(load))
        return tuple(
            n_k if any(internal[t] > 0 for t in row) else 0
            for n_k, row in zip(load, self.topology.row_sets)
        )


class CodingEvaluator(SuccessEvaluator):
    """theta_k(n) = max over t in B_k of phi_t(nH); one SIC pass of packet coding."""

    def __init__(self, phi: SuccessEvaluator, topology: BipartiteTopology):
        super().__init__(topology.classes, f"theta[{phi.name}]")
        self.phi = phi
        self.topology = topology

    def _evaluate(self, load: Load) -> Load:
        internal = self.phi.evaluate(self.topology.map_load(load))
        return tuple(max((internal[t] for t in row), default=0) for row in self.topology.row_sets)


def multiplex(phi: SuccessEvaluator, topology: BipartiteTopology) -> SuccessEvaluator:
    """
    Feed K external classes into an all-or-nothing receiver with T internal classes.

    Raises:
        TopologyError: If some class feeds more than one internal class
        PropertyNotVerifiedError: If phi is not flagged all-or-nothing
        DimensionError: If phi's class count differs from T
    """
    if not topology.is_multiplexing:
        raise TopologyError("Traffic multiplexing needs at most one nonzero per row of H")
    _require_all_or_nothing(phi, "multiplex")
    _require_dimension(phi, topology)
    return MultiplexEvaluator(phi, topology).mark(all_or_nothing=True)


def packet_code(phi: SuccessEvaluator, topology: BipartiteTopology) -> SuccessEvaluator:
    """
    Multicast each external class to a disjoint set of internal classes and run SIC.

    Returns ((theta^c)*)^c. Copies of a packet are only interchangeable when
    phi is all-or-nothing, so other receivers are rejected rather than given
    an answer that depends on which copies decode.

    Raises:
        TopologyError: If some internal class is fed by more than one class
        PropertyNotVerifiedError: If phi is not flagged all-or-nothing
        DimensionError: If phi's class count differs from T
    """
    if not topology.is_coding:
        raise TopologyError("Packet coding needs at most one nonzero per column of H")
    _require_all_or_nothing(phi, "packet_code")
    _require_dimension(phi, topology)
    theta = CodingEvaluator(phi, topology)
    return complement(closure(complement(theta))).mark(all_or_nothing=True)


def multiplexed_dfold(classes: int, D: int) -> SuccessEvaluator:
    """K classes sharing one D-fold receiver: all decode iff the total is at most D."""
    return multiplex(d_fold(D), BipartiteTopology(tuple((1,) for _ in range(classes))))


def parallel_many(receivers: Sequence[SuccessEvaluator]) -> SuccessEvaluator:
    if not receivers:
        raise ValueError("parallel_many needs at least one receiver")
    return reduce(parallel, receivers)


def dfold_network(topology: BipartiteTopology, D: int) -> SuccessEvaluator:
    """
    T cooperative D-fold receivers on an arbitrary K x T topology.

    The topology is split into a coding stage and a multiplexing stage with
    one intermediate node per edge; the D-fold receivers run in parallel
    behind the multiplexing stage.
    """
    coding, muxing = split_bipartite(topology)
    if coding is None:
        return zero(topology.classes)

    receivers = parallel_many([d_fold(D) for _ in range(topology.receivers)])
    logger.debug(
        "D-fold network: %d classes, %d edges, %d receivers",
        topology.classes,
        topology.edge_count,
        topology.receivers,
    )
    return packet_code(multiplex(receivers, muxing), coding)
