"""
Builders and sweep points for the command-line experiments.

Everything here is a module-level function of a RunConfig (plus a sweep
value) so that work items can be shipped to worker processes.
"""

import hashlib
import logging
from typing import Any, Callable, Optional

import numpy as np

from .algebra import SuccessEvaluator, VerificationBox
from .config import RunConfig
from .maxsum import build_success_table
from .poisson import (
    DegreeDistribution,
    ExactSaturating,
    PoissonReceiverModel,
    Truncated,
    density_evolution,
    induce,
    route,
)
from .rayleigh import CaptureParams, capture_series, rayleigh_model
from .receivers import d_fold, dfold_network, near_far, slotted_aloha
from .simulator import CaptureSlot, DFoldSlot, NearFarSlot, RunStats, Scenario, SlotModel, simulate_chunk
from .tables import TableEvaluator, materialize, read_table_csv, table_header
from .topology import BipartiteTopology, read_topology

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 1000


def receiver_topology(config: RunConfig) -> BipartiteTopology:
    receiver = config.receiver
    if "matrix" in receiver:
        return BipartiteTopology.from_array(receiver["matrix"])
    return read_topology(config.resolve(receiver["topology_path"]))


def receiver_d(config: RunConfig) -> int:
    """Capacity D of the receiver's D-fold building blocks (1 for SA and near-far)."""
    return config.receiver.get("D", 1)


def build_receiver(config: RunConfig) -> SuccessEvaluator:
    """The receiver named by the [receiver] section, as a lazy evaluator or table."""
    receiver = config.receiver
    kind = receiver["kind"]
    if kind == "sa":
        return slotted_aloha()
    if kind == "dfold":
        return d_fold(receiver["D"])
    if kind == "nearfar":
        return near_far()
    if kind == "table":
        return read_table_csv(config.resolve(receiver["path"]), saturating=True)

    topology = receiver_topology(config)
    if receiver.get("method", "maxsum") == "maxsum":
        return build_success_table(topology, receiver["D"])
    return dfold_network(topology, receiver["D"])


def build_table(config: RunConfig) -> TableEvaluator:
    """
    Tabulate the receiver over its box.

    The box side is `receiver.cap` when given, else D+1 (every load beyond
    it behaves like D+1 for D-fold receivers).
    """
    evaluator = build_receiver(config)
    if isinstance(evaluator, TableEvaluator) and "cap" not in config.receiver:
        return evaluator
    side = config.receiver.get("cap", receiver_d(config) + 1)
    return materialize(evaluator, VerificationBox.cube(evaluator.dimension, side), saturating=True)


def build_induced_model(config: RunConfig) -> PoissonReceiverModel:
    """Poisson receiver induced by the configured ALOHA receiver."""
    poisson = config.poisson
    if poisson.get("mode", "exact") == "truncated":
        mode = Truncated(poisson.get("n_max", 30), poisson.get("epsilon", 1e-12))
        return induce(build_receiver(config), mode)

    table = build_table(config)
    cap = table.cap[0]
    if any(c != cap for c in table.cap):
        raise ValueError(f"Exact induction needs the same cap for every class, got {table.cap}")
    return induce(table, ExactSaturating(cap - 1))


def capture_params(config: RunConfig) -> CaptureParams:
    capture = config.capture
    options = {k: capture[k] for k in ("n_max", "tail_tol") if k in capture}
    if "gamma" in capture:
        return CaptureParams(capture["gamma"], capture["b"], **options)
    return CaptureParams.from_db(capture["gamma_db"], capture["b_db"], **options)


def build_slot_poisson_model(config: RunConfig) -> PoissonReceiverModel:
    """
    Poisson model of one slot as seen by the external classes.

    The induced (or capture) model is routed through [routing] when present.
    """
    classes = len(config.sweep["users"])
    if config.capture is not None:
        internal = len(config.routing[0]) if config.routing else classes
        model = rayleigh_model(capture_params(config), internal)
    else:
        model = build_induced_model(config)
    return route(model, config.routing) if config.routing else model


def build_slot_model(config: RunConfig) -> SlotModel:
    if config.capture is not None:
        return CaptureSlot(capture_params(config))

    receiver = config.receiver
    kind = receiver["kind"]
    if kind == "sa":
        return DFoldSlot(1)
    if kind == "dfold":
        return DFoldSlot(receiver["D"])
    if kind == "nearfar":
        return NearFarSlot()
    if kind == "topology":
        return DFoldSlot(receiver["D"], receiver_topology(config))
    raise ValueError("Table receivers cannot be simulated; describe the receiver as a topology")


def degree_distributions(config: RunConfig) -> tuple[DegreeDistribution, ...]:
    return tuple(
        DegreeDistribution.regular(d) if isinstance(d, int) else DegreeDistribution.from_coefficients(d)
        for d in config.sweep["degrees"]
    )


def sweep_values(config: RunConfig) -> list[int]:
    """User counts of the swept class, start..stop inclusive."""
    sweep = config.sweep
    return list(range(sweep["start"], sweep["stop"] + 1, sweep.get("step", 1)))


def users_at(config: RunConfig, value: int) -> tuple[int, ...]:
    users = list(config.sweep["users"])
    users[config.sweep.get("class", len(users)) - 1] = value
    return tuple(users)


def offered_load(config: RunConfig, value: int) -> np.ndarray:
    """G: users per slot for every class at a sweep value."""
    return np.asarray(users_at(config, value), dtype=float) / config.sweep["slots"]


def de_point(config: RunConfig, value: int) -> list[float]:
    """Density-evolution error probability per class at one sweep value."""
    trace = density_evolution(
        build_slot_poisson_model(config),
        offered_load(config, value),
        degree_distributions(config),
        i_max=config.de.get("i_max", 100),
        tol=config.de.get("tol", 1e-12),
    )
    return [float(e) for e in trace.error]


def receiver_file_digests(config: RunConfig) -> dict[str, Optional[str]]:
    """SHA-256 of each file the receiver is read from, by config field; None if the file is missing."""
    receiver = config.receiver or {}
    digests: dict[str, Optional[str]] = {}
    for field in ("path", "topology_path"):
        if field in receiver:
            path = config.resolve(receiver[field])
            digests[field] = hashlib.sha256(path.read_bytes()).hexdigest() if path.is_file() else None
    return digests


def de_inputs(config: RunConfig, value: int) -> dict[str, Any]:
    """Everything a density-evolution point depends on (cache key)."""
    keys = ("receiver", "capture", "poisson", "routing", "de")
    sweep = {k: config.sweep[k] for k in ("slots", "degrees")}
    return {
        "kind": "de",
        "users": users_at(config, value),
        "sweep": sweep,
        "files": receiver_file_digests(config),
        **{k: config.data.get(k) for k in keys},
    }


def build_scenario(config: RunConfig, value: int) -> Scenario:
    sim = config.sim
    assignment = tuple(
        rule if isinstance(rule, str) else tuple(rule) for rule in sim.get("assignment", ())
    )
    return Scenario(
        slots=config.sweep["slots"],
        users=users_at(config, value),
        degrees=degree_distributions(config),
        slot_model=build_slot_model(config),
        routing=tuple(tuple(row) for row in config.routing) if config.routing else None,
        assignment=assignment,
        i_max=sim.get("i_max", 100),
        seed=config.seed,
    )


def sim_chunks(config: RunConfig) -> list[tuple[int, int]]:
    """Fixed (start, stop) run ranges; independent of the worker count."""
    runs = config.sim["runs"]
    size = config.sim.get("chunk", DEFAULT_CHUNK)
    return [(start, min(start + size, runs)) for start in range(0, runs, size)]


def sim_chunk(config: RunConfig, value: int, start: int, stop: int) -> RunStats:
    return simulate_chunk(build_scenario(config, value), start, stop)


def sim_inputs(config: RunConfig, value: int, start: int, stop: int) -> dict[str, Any]:
    keys = ("receiver", "capture", "routing", "sim")
    sweep = {k: config.sweep[k] for k in ("slots", "degrees")}
    return {
        "kind": "sim",
        "users": users_at(config, value),
        "sweep": sweep,
        "files": receiver_file_digests(config),
        "seed": config.seed,
        "runs": [start, stop],
        **{k: config.data.get(k) for k in keys},
    }


def grid_points(config: RunConfig, dimension: int) -> list[np.ndarray]:
    """
    Offered loads from the [grid] section.

    `points` lists loads (scalars are repeated across classes); otherwise
    start/stop/step gives the diagonal rho_1 = ... = rho_K.
    """
    grid = config.grid
    if "points" in grid:
        points = []
        for point in grid["points"]:
            values = np.atleast_1d(np.asarray(point, dtype=float))
            if values.shape[0] == 1:
                values = np.repeat(values, dimension)
            if values.shape[0] != dimension:
                raise ValueError(f"Grid point {point} does not have {dimension} classes")
            points.append(values)
        return points

    start, stop, step = grid["start"], grid["stop"], grid["step"]
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [np.full(dimension, start + i * step) for i in range(count)]


def induce_rows(config: RunConfig) -> tuple[list[str], list[list[float]]]:
    model = build_induced_model(config)
    K = model.dimension
    header = [f"rho_{k}" for k in range(1, K + 1)] + [f"Psuc_{k}" for k in range(1, K + 1)]
    rows = [[*rho.tolist(), *model.psuc(rho).tolist()] for rho in grid_points(config, K)]
    return header, rows


def rayleigh_rows(config: RunConfig) -> tuple[list[str], list[list[float]]]:
    params = capture_params(config)
    rows = []
    for rho in grid_points(config, 1):
        series = capture_series(float(rho[0]), params)
        rows.append([float(rho[0]), series.value])
    return ["rho", "Psuc"], rows


def table_rows(config: RunConfig) -> tuple[list[str], list[tuple[int, ...]]]:
    table = build_table(config)
    return table_header(table.dimension), [load + value for load, value in table.rows()]


def admit(
    config: RunConfig, evaluate: Callable[[int], list[float]]
) -> tuple[int, float]:
    """
    Largest swept user count keeping the target class's error at most the target.

    Bisects over [start, stop], assuming the error grows with the swept
    count.

    Args:
        config: Run config with sweep.target (default 1e-5) and sweep.target_class
        evaluate: Error probabilities per class at a sweep value

    Returns:
        (admitted count, target-class error at that count)

    Raises:
        ValueError: If even the smallest count misses the target
    """
    sweep = config.sweep
    target = sweep.get("target", 1e-5)
    k = sweep.get("target_class", 1) - 1
    low, high = sweep["start"], sweep["stop"]

    error_low = evaluate(low)[k]
    if error_low > target:
        raise ValueError(
            f"Class {k + 1} error {error_low:.3e} already exceeds {target:g} at {low} users"
        )
    error_high = evaluate(high)[k]
    if error_high <= target:
        logger.warning("Target still met at the top of the range (%d users)", high)
        return high, error_high

    # Invariant: error(low) <= target < error(high)
    while high - low > 1:
        middle = (low + high) // 2
        error = evaluate(middle)[k]
        logger.info("admit: %d users -> class %d error %.3e", middle, k + 1, error)
        if error <= target:
            low, error_low = middle, error
        else:
            high = middle
    return low, error_low


def error_header(classes: int, with_std_err: bool = False) -> list[str]:
    header = ["sweep_value"] + [f"err_class_{k}" for k in range(1, classes + 1)]
    if with_std_err:
        header += [f"se_class_{k}" for k in range(1, classes + 1)]
    return header


def stats_row(value: int, stats: RunStats) -> list[Any]:
    return [value, *stats.error_rate.tolist(), *stats.std_err.tolist()]

