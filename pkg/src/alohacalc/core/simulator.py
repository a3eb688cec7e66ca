"""
Monte Carlo simulation of coded random access with SIC over T slots.

Each run places packet replicas in slots, routes every replica to an internal
class of its slot and connects it to that class's receivers. Rounds then
sweep all receivers against the residual packets and remove every decoded
packet from the whole frame, until a round decodes nothing or the round cap
is reached.

Every run draws from its own stream `default_rng([seed, run_index])`, so
totals do not depend on how runs are split into chunks or across workers.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .algebra import Load, SuccessEvaluator, as_load
from .poisson import DegreeDistribution
from .rayleigh import CaptureParams
from .topology import BipartiteTopology, TopologyError
from ..utils.csv_format import write_csv

logger = logging.getLogger(__name__)

# Largest number of packets the exhaustive oracle will track by identity.
ORACLE_PACKET_LIMIT = 12

SINGLE_RECEIVER = BipartiteTopology(((1,),))
NEAR_FAR_RECEIVER = BipartiteTopology(((1,), (1,)))


class InstanceTooLargeError(ValueError):
    """Raised when the exhaustive oracle is given more packets than it will track."""

    pass


@dataclass(frozen=True)
class DFoldSlot:
    """A slot holding a network of D-fold receivers described by `topology`."""

    D: int
    topology: BipartiteTopology = SINGLE_RECEIVER

    def __post_init__(self):
        if self.D < 1:
            raise ValueError(f"D-fold receivers need D >= 1, got {self.D}")


@dataclass(frozen=True)
class CaptureSlot:
    """A slot holding one Rayleigh capture receiver."""

    params: CaptureParams
    topology: BipartiteTopology = SINGLE_RECEIVER


@dataclass(frozen=True)
class NearFarSlot:
    """
    A slot holding one near-far receiver hearing a near and a far class.

    All alive packets at the receiver decode when each class has at most one
    of them; otherwise none do.
    """

    topology: BipartiteTopology = NEAR_FAR_RECEIVER

    def __post_init__(self):
        if self.topology != NEAR_FAR_RECEIVER:
            raise TopologyError("A near-far slot is one receiver hearing exactly two classes")


SlotModel = Union[DFoldSlot, CaptureSlot, NearFarSlot]
Assignment = Union[str, tuple[int, ...]]


@dataclass(frozen=True)
class Scenario:
    """
    One simulated frame configuration.

    Attributes:
        slots: Number of slots T
        users: Packets (users) per external class
        degrees: Replica-count distribution per external class
        slot_model: Receiver(s) in every slot
        routing: External-to-internal routing matrix (K x K_int); None maps
            classes one-to-one when K = K_int, or all onto a single internal class
        assignment: Per class "uniform" (replicas in independent uniform slots),
            "scheduled" (one replica in one uniform slot) or a tuple of 0-based
            slots every packet of that class is sent to
        i_max: SIC round cap
        seed: Base seed of the per-run random streams
    """

    slots: int
    users: tuple[int, ...]
    degrees: tuple[DegreeDistribution, ...]
    slot_model: SlotModel
    routing: Optional[tuple[tuple[float, ...], ...]] = None
    assignment: tuple[Assignment, ...] = ()
    i_max: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError(f"Need at least one slot, got {self.slots}")
        if self.i_max < 1:
            raise ValueError(f"i_max must be at least 1, got {self.i_max}")
        users = tuple(int(n) for n in self.users)
        if not users or any(n < 0 for n in users):
            raise ValueError(f"User counts must be non-negative, got {users}")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "degrees", tuple(self.degrees))
        if len(self.degrees) != len(users):
            raise ValueError(f"Need {len(users)} degree distributions, got {len(self.degrees)}")

        assignment = tuple(self.assignment) or ("uniform",) * len(users)
        if len(assignment) != len(users):
            raise ValueError(f"Need {len(users)} assignment rules, got {len(assignment)}")
        for k, rule in enumerate(assignment):
            if isinstance(rule, str):
                if rule not in ("uniform", "scheduled"):
                    raise ValueError(f"Class {k + 1}: unknown assignment rule {rule!r}")
            elif not rule or any(not 0 <= s < self.slots for s in rule):
                raise ValueError(f"Class {k + 1}: fixed slots {rule} outside 0..{self.slots - 1}")
        object.__setattr__(
            self,
            "assignment",
            tuple(r if isinstance(r, str) else tuple(int(s) for s in r) for r in assignment),
        )

        matrix = self.routing_matrix
        if matrix.shape != (len(users), self.internal_classes):
            raise TopologyError(
                f"Routing matrix of shape {matrix.shape} does not map {len(users)} classes "
                f"onto {self.internal_classes} internal classes"
            )
        if np.any(matrix < 0) or np.any(matrix.sum(axis=1) > 1 + 1e-12):
            raise ValueError("Routing rows must be non-negative and sum to at most 1")

    @property
    def classes(self) -> int:
        return len(self.users)

    @property
    def internal_classes(self) -> int:
        return self.slot_model.topology.classes

    @property
    def receivers_per_slot(self) -> int:
        return self.slot_model.topology.receivers

    @property
    def routing_matrix(self) -> np.ndarray:
        if self.routing is not None:
            return np.asarray(self.routing, dtype=float).reshape(len(self.routing), -1)
        if self.internal_classes == len(self.users):
            return np.eye(len(self.users))
        if self.internal_classes == 1:
            return np.ones((len(self.users), 1))
        raise TopologyError(
            f"{len(self.users)} classes need a routing matrix onto {self.internal_classes} internal classes"
        )

    @property
    def load(self) -> np.ndarray:
        """Users per slot, G."""
        return np.asarray(self.users, dtype=float) / self.slots


@dataclass
class RunStats:
    """Per-class packet counts accumulated over simulation runs."""

    decoded: np.ndarray
    trials: np.ndarray
    runs: int = 0

    @classmethod
    def empty(cls, classes: int) -> "RunStats":
        return cls(np.zeros(classes, dtype=np.int64), np.zeros(classes, dtype=np.int64))

    def __add__(self, other: "RunStats") -> "RunStats":
        return RunStats(self.decoded + other.decoded, self.trials + other.trials, self.runs + other.runs)

    @property
    def errors(self) -> np.ndarray:
        return self.trials - self.decoded

    @property
    def error_rate(self) -> np.ndarray:
        """Undecoded fraction per class; 0 for a class that sent nothing."""
        return np.divide(
            self.errors, self.trials, out=np.zeros(len(self.trials)), where=self.trials > 0
        )

    @property
    def std_err(self) -> np.ndarray:
        p = self.error_rate
        return np.sqrt(
            np.divide(p * (1 - p), self.trials, out=np.zeros(len(p)), where=self.trials > 0)
        )

    def write_csv(self, path: Path | str) -> Path:
        rows = (
            [k + 1, int(e), int(t), float(r), float(s)]
            for k, (e, t, r, s) in enumerate(zip(self.errors, self.trials, self.error_rate, self.std_err))
        )
        return write_csv(path, ["class", "errors", "trials", "error_rate", "std_err"], rows)


def decode_slot_dfold(packets: Sequence[int], D: int) -> list[int]:
    """All residual packets of a D-fold receiver decode iff there are at most D."""
    packets = list(packets)
    return packets if len(packets) <= D else []


def decode_slot_capture(gains: np.ndarray, gamma: float, b: float) -> np.ndarray:
    """
    Greedy capture with SIC inside one receiver.

    The strongest residual signal is decoded when its power is at least b
    times the remaining interference plus noise (1/gamma), then cancelled.

    Args:
        gains: Exp(1) powers of the residual signals
        gamma: Linear SNR
        b: Linear SINR threshold

    Returns:
        Boolean mask of decoded signals, aligned with `gains`
    """
    gains = np.asarray(gains, dtype=float)
    decoded = np.zeros(gains.shape[0], dtype=bool)
    if gains.size == 0:
        return decoded
    order = np.argsort(-gains, kind="stable")
    ordered = gains[order]
    weaker = ordered.sum() - np.cumsum(ordered)
    captured = ordered >= b * (weaker + 1.0 / gamma)
    decoded[order] = np.logical_and.accumulate(captured)
    return decoded


@dataclass
class _Frame:
    """Replica graph of one run."""

    packet_class: np.ndarray
    edge_packet: np.ndarray
    edge_receiver: np.ndarray
    edge_class: np.ndarray
    receivers: int
    gains: Optional[np.ndarray] = None
    decoded: np.ndarray = field(init=False)

    def __post_init__(self):
        self.decoded = np.zeros(self.packet_class.shape[0], dtype=bool)


def _place_replicas(s: Scenario, rng: np.random.Generator) -> _Frame:
    topology = s.slot_model.topology
    routes = s.routing_matrix
    receivers_per_slot = topology.receivers
    membership = topology.array.astype(bool)

    packet_class, edge_packet, edge_receiver, edge_class = [], [], [], []
    offset = 0
    for k, (n_k, degree, rule) in enumerate(zip(s.users, s.degrees, s.assignment)):
        packet_class.append(np.full(n_k, k, dtype=np.int64))
        if n_k == 0:
            continue

        if rule == "uniform":
            replicas = degree.sample(rng, n_k)
            slots = rng.integers(s.slots, size=int(replicas.sum()))
        elif rule == "scheduled":
            replicas = np.ones(n_k, dtype=np.int64)
            slots = rng.integers(s.slots, size=n_k)
        else:
            replicas = np.full(n_k, len(rule), dtype=np.int64)
            slots = np.tile(np.asarray(rule, dtype=np.int64), n_k)
        owners = offset + np.repeat(np.arange(n_k), replicas)

        # Last option is "dropped": the replica never reaches a receiver.
        row = routes[k]
        options = np.append(row, max(0.0, 1.0 - row.sum()))
        internal = rng.choice(options.shape[0], size=owners.shape[0], p=options / options.sum())
        kept = internal < s.internal_classes
        owners, slots, internal = owners[kept], slots[kept], internal[kept]

        replica_index, receiver_index = np.nonzero(membership[internal])
        edge_packet.append(owners[replica_index])
        edge_receiver.append(slots[replica_index] * receivers_per_slot + receiver_index)
        edge_class.append(internal[replica_index])
        offset += n_k

    def joined(parts: list[np.ndarray]) -> np.ndarray:
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    frame = _Frame(
        joined(packet_class),
        joined(edge_packet),
        joined(edge_receiver),
        joined(edge_class),
        s.slots * receivers_per_slot,
    )
    if isinstance(s.slot_model, CaptureSlot):
        frame.gains = rng.exponential(size=frame.edge_packet.shape[0])
    return frame


def _round_dfold(frame: _Frame, D: int) -> np.ndarray:
    alive = ~frame.decoded[frame.edge_packet]
    counts = np.bincount(frame.edge_receiver[alive], minlength=frame.receivers)
    success = alive & (counts[frame.edge_receiver] <= D)
    return np.unique(frame.edge_packet[success])


def _round_near_far(frame: _Frame) -> np.ndarray:
    alive = ~frame.decoded[frame.edge_packet]
    counts = np.zeros((frame.receivers, 2), dtype=np.int64)
    np.add.at(counts, (frame.edge_receiver[alive], frame.edge_class[alive]), 1)
    clear = (counts <= 1).all(axis=1)
    success = alive & clear[frame.edge_receiver]
    return np.unique(frame.edge_packet[success])


def _round_capture(frame: _Frame, params: CaptureParams, dirty: np.ndarray) -> np.ndarray:
    alive = ~frame.decoded[frame.edge_packet]
    found = []
    for receiver in np.flatnonzero(dirty):
        edges = np.flatnonzero(alive & (frame.edge_receiver == receiver))
        if edges.size == 0:
            continue
        mask = decode_slot_capture(frame.gains[edges], params.gamma, params.b)
        found.append(frame.edge_packet[edges[mask]])
    dirty[:] = False
    return np.unique(np.concatenate(found)) if found else np.zeros(0, dtype=np.int64)


def run_once(s: Scenario, run_index: int) -> np.ndarray:
    """
    Simulate one frame.

    Returns:
        Decoded packets per class
    """
    rng = np.random.default_rng([s.seed, run_index])
    frame = _place_replicas(s, rng)
    dirty = np.zeros(frame.receivers, dtype=bool)
    dirty[frame.edge_receiver] = True

    for round_index in range(s.i_max):
        if isinstance(s.slot_model, DFoldSlot):
            newly = _round_dfold(frame, s.slot_model.D)
        elif isinstance(s.slot_model, NearFarSlot):
            newly = _round_near_far(frame)
        else:
            newly = _round_capture(frame, s.slot_model.params, dirty)
        newly = newly[~frame.decoded[newly]]
        if newly.size == 0:
            break
        frame.decoded[newly] = True
        touched = np.isin(frame.edge_packet, newly)
        dirty[frame.edge_receiver[touched]] = True

    return np.bincount(frame.packet_class[frame.decoded], minlength=s.classes)


def simulate_chunk(s: Scenario, start: int, stop: int) -> RunStats:
    """Aggregate runs with indices start..stop-1."""
    stats = RunStats.empty(s.classes)
    users = np.asarray(s.users, dtype=np.int64)
    for run_index in range(start, stop):
        stats.decoded += run_once(s, run_index)
        stats.trials += users
    stats.runs = stop - start
    return stats


def simulate(s: Scenario, runs: int) -> RunStats:
    """
    Estimate per-class packet error rates over `runs` independent frames.

    Raises:
        ValueError: If runs < 1
    """
    if runs < 1:
        raise ValueError(f"Need at least one run, got {runs}")
    logger.info("Simulating %d runs: T=%d, users=%s", runs, s.slots, s.users)
    return simulate_chunk(s, 0, runs)


def exhaustive_sic_oracle(
    receivers: Sequence[SuccessEvaluator], topology: BipartiteTopology, n: Sequence[int]
) -> Load:
    """
    Brute-force SIC with explicit packet identities.

    Every class-k packet is heard by every receiver in B_k. Each sweep asks
    every receiver how many of its residual packets it decodes (the
    lowest-numbered packets are taken when a receiver decodes only part of
    its load); decoded packets are then removed everywhere. Sweeps repeat
    until nothing changes.

    Args:
        receivers: T single-class receivers, one per column of the topology
        topology: K x T association matrix
        n: Packets per class

    Returns:
        Decoded packets per class

    Raises:
        InstanceTooLargeError: If more than ORACLE_PACKET_LIMIT packets are given
    """
    load = as_load(n, topology.classes)
    if len(receivers) != topology.receivers:
        raise TopologyError(f"Need {topology.receivers} receivers, got {len(receivers)}")
    if sum(load) > ORACLE_PACKET_LIMIT:
        raise InstanceTooLargeError(
            f"{sum(load)} packets exceed the oracle limit of {ORACLE_PACKET_LIMIT}"
        )

    owner = [k for k, n_k in enumerate(load) for _ in range(n_k)]
    decoded: set[int] = set()
    while True:
        found: set[int] = set()
        for t, receiver in enumerate(receivers):
            heard = [p for p, k in enumerate(owner) if k in topology.column_sets[t] and p not in decoded]
            count = receiver((len(heard),))[0]
            found.update(heard[:count])
        if found <= decoded:
            break
        decoded |= found

    return tuple(sum(1 for p in decoded if owner[p] == k) for k in range(topology.classes))
