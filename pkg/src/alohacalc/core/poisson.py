"""
Poisson receivers: induction from ALOHA receivers, routing and density evolution.

A Poisson receiver maps independent Poisson offered loads rho (one mean per
class) to per-class success probabilities. The models here are plain
callables over numpy vectors so density evolution can evaluate them many
thousands of times.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.stats import poisson

from .algebra import DimensionError, DomainError, Load, SuccessEvaluator
from .tables import TableEvaluator
from ..utils.csv_format import write_csv

logger = logging.getLogger(__name__)

# Float slop tolerated before an output counts as outside [0, 1].
RANGE_TOLERANCE = 1e-9


class TruncationError(ValueError):
    """Raised when a series cannot reach its error budget within the allowed terms."""

    pass


def _as_rho(rho: Sequence[float] | np.ndarray, dimension: int) -> np.ndarray:
    values = np.asarray(rho, dtype=float).reshape(-1)
    if values.shape[0] != dimension:
        raise DimensionError(f"Expected {dimension} offered loads, got {values.shape[0]}")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise DomainError(f"Offered loads must be finite and non-negative, got {values.tolist()}")
    return values


class PoissonReceiverModel:
    """
    Map rho -> (P_suc,1(rho), ..., P_suc,K(rho)).

    Args:
        dimension: Number of classes K
        psuc: Function of a validated length-K array returning K probabilities
        name: Label used in logs and error messages
    """

    def __init__(self, dimension: int, psuc: Callable[[np.ndarray], np.ndarray], name: str = "poisson"):
        if dimension < 1:
            raise DimensionError(f"A Poisson receiver needs at least one class, got {dimension}")
        self.dimension = dimension
        self.name = name
        self._psuc = psuc

    def psuc(self, rho: Sequence[float] | np.ndarray) -> np.ndarray:
        """
        Success probabilities at offered load rho.

        Raises:
            DimensionError: If rho has the wrong length
            DomainError: If rho is negative or the model leaves [0, 1]
        """
        values = np.asarray(self._psuc(_as_rho(rho, self.dimension)), dtype=float).reshape(-1)
        if values.shape[0] != self.dimension:
            raise DimensionError(f"{self.name} returned {values.shape[0]} values for {self.dimension} classes")
        if np.any(values < -RANGE_TOLERANCE) or np.any(values > 1 + RANGE_TOLERANCE) or np.any(np.isnan(values)):
            raise DomainError(f"{self.name} returned success probabilities outside [0, 1]: {values.tolist()}")
        return np.clip(values, 0.0, 1.0)

    __call__ = psuc

    def throughput(self, rho: Sequence[float] | np.ndarray) -> np.ndarray:
        """S_k = rho_k * P_suc,k(rho)."""
        values = _as_rho(rho, self.dimension)
        return values * self.psuc(values)

    def __repr__(self) -> str:
        return f"<PoissonReceiverModel {self.name} K={self.dimension}>"


def class_weights(rho: float, D: int) -> np.ndarray:
    """
    Probabilities h_0..h_{D+1} of the equivalence classes of one Poisson count.

    h_d is the Poisson pmf for d <= D; h_{D+1} collects the whole tail.
    """
    if rho < 0:
        raise DomainError(f"Offered load must be non-negative, got {rho}")
    weights = poisson.pmf(np.arange(D + 2), rho)
    weights[D + 1] = poisson.sf(D, rho)
    return weights


def dfold_psuc(rho: float, D: int) -> float:
    """Closed form for a D-fold receiver: P(at most D-1 other packets)."""
    if D < 1:
        raise ValueError(f"D-fold receivers need D >= 1, got {D}")
    if rho < 0:
        raise DomainError(f"Offered load must be non-negative, got {rho}")
    return float(poisson.cdf(D - 1, rho))


@dataclass(frozen=True)
class ExactSaturating:
    """Sum over the (D+2)^K equivalence classes of a saturating table with cap D+1."""

    D: int


@dataclass(frozen=True)
class Truncated:
    """Sum over loads up to a per-class cap chosen so the dropped mass is at most epsilon."""

    n_max: int = 30
    epsilon: float = 1e-12


InductionMode = ExactSaturating | Truncated


def induce(phi: SuccessEvaluator, mode: InductionMode) -> PoissonReceiverModel:
    """
    The Poisson receiver induced by an ALOHA receiver.

    P_suc,k(rho) = (1/rho_k) sum_n phi_k(n) prod_l Pois(n_l; rho_l). Dividing
    through, each class-k term weighs phi_k(n)/n_k by Pois(n_k - 1; rho_k),
    which stays finite at rho_k = 0 and gives the n_k = 1 limit there.

    Args:
        phi: The ALOHA receiver
        mode: ExactSaturating(D) for a saturating table with cap D+1, or
            Truncated(n_max, epsilon) for any evaluator

    Raises:
        ValueError: If exact mode is requested for anything but a saturating table with cap D+1
    """
    if isinstance(mode, ExactSaturating):
        return _induce_exact(phi, mode.D)
    if isinstance(mode, Truncated):
        return _induce_truncated(phi, mode.n_max, mode.epsilon)
    raise TypeError(f"Unknown induction mode {mode!r}")


def _induce_exact(phi: SuccessEvaluator, D: int) -> PoissonReceiverModel:
    if not isinstance(phi, TableEvaluator) or not phi.saturating:
        raise ValueError(f"Exact induction needs a saturating table, got {phi.name}")
    if phi.cap != (D + 1,) * phi.dimension:
        raise ValueError(f"Exact induction with D={D} needs cap {(D + 1,) * phi.dimension}, got {phi.cap}")

    K = phi.dimension
    rows = phi.rows()
    loads = np.array([load for load, _ in rows], dtype=int)
    values = np.array([value for _, value in rows], dtype=float)
    counts = np.arange(D + 2)
    classes = np.arange(K)

    def psuc(rho: np.ndarray) -> np.ndarray:
        # h[k, d]: equivalence-class probabilities; w[k, d] = h[k, d] / rho_k
        h = np.stack([class_weights(r, D) for r in rho])
        w = np.zeros_like(h)
        w[:, 1 : D + 1] = poisson.pmf(counts[None, :D], rho[:, None]) / counts[None, 1 : D + 1]
        positive = rho > 0
        w[positive, D + 1] = poisson.sf(D, rho[positive]) / rho[positive]

        h_sel = h[classes[None, :], loads]
        w_sel = w[classes[None, :], loads]
        result = np.empty(K)
        for k in range(K):
            others = np.prod(np.delete(h_sel, k, axis=1), axis=1)
            result[k] = np.sum(values[:, k] * w_sel[:, k] * others)
        return result

    return PoissonReceiverModel(K, psuc, f"induced[{phi.name}]")


def _class_cap(rho: float, n_max: int, budget: float) -> int:
    """Smallest N with P(Pois(rho) > N - 1) <= budget."""
    for n in range(1, n_max + 1):
        if poisson.sf(n - 1, rho) <= budget:
            return n
    raise TruncationError(
        f"Poisson tail at rho={rho} stays above {budget:g} up to n_max={n_max}"
    )


def _induce_truncated(phi: SuccessEvaluator, n_max: int, epsilon: float) -> PoissonReceiverModel:
    K = phi.dimension
    memo: dict[Load, Load] = {}

    def value(load: Load) -> Load:
        if load not in memo:
            memo[load] = phi(load)
        return memo[load]

    def psuc(rho: np.ndarray) -> np.ndarray:
        caps = [_class_cap(r, n_max, epsilon / K) for r in rho]
        grids = [np.arange(c + 1) for c in caps]
        pmfs = [poisson.pmf(g, r) for g, r in zip(grids, rho)]
        shifted = [
            np.concatenate([[0.0], poisson.pmf(g[1:] - 1, r) / g[1:]]) for g, r in zip(grids, rho)
        ]

        result = np.zeros(K)
        for load in np.ndindex(*(c + 1 for c in caps)):
            decoded = value(tuple(load))
            if not any(decoded):
                continue
            base = np.array([pmfs[l][load[l]] for l in range(K)])
            for k in range(K):
                if decoded[k]:
                    weight = decoded[k] * shifted[k][load[k]] * np.prod(np.delete(base, k))
                    result[k] += weight
        return result

    logger.debug("Truncated induction of %s with n_max=%d, epsilon=%g", phi.name, n_max, epsilon)
    return PoissonReceiverModel(K, psuc, f"induced[{phi.name}]")


def route(model: PoissonReceiverModel, routing: Sequence[Sequence[float]] | np.ndarray) -> PoissonReceiverModel:
    """
    Route K1 external classes onto the K2 internal classes of a Poisson receiver.

    An external class-k1 packet becomes an internal class-k2 packet with
    probability r[k1, k2]; the remaining 1 - sum_k2 r[k1, k2] is dropped and
    counts as a failure. Internal load is rho = G R and
    P~_k1(G) = sum_k2 r[k1, k2] P_k2(rho).

    Raises:
        DimensionError: If R does not have K2 columns
        ValueError: If R has negative entries or a row sum above 1
    """
    matrix = np.asarray(routing, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != model.dimension:
        raise DimensionError(
            f"Routing matrix of shape {matrix.shape} does not feed {model.dimension} internal classes"
        )
    if np.any(matrix < 0):
        raise ValueError("Routing probabilities must be non-negative")
    sums = matrix.sum(axis=1)
    if np.any(sums > 1 + 1e-12):
        row = int(np.argmax(sums)) + 1
        raise ValueError(f"Routing row {row} sums to {sums[row - 1]:g} > 1")

    def psuc(G: np.ndarray) -> np.ndarray:
        return matrix @ model.psuc(G @ matrix)

    return PoissonReceiverModel(matrix.shape[0], psuc, f"routed[{model.name}]")


def inverse_multiplexer(internal_classes: int, splits: Sequence[Mapping[int, float]]) -> np.ndarray:
    """
    Routing matrix from per-external-class splits.

    Args:
        internal_classes: K2
        splits: One mapping per external class from 1-based internal class to probability

    Returns:
        The K1 x K2 routing matrix
    """
    matrix = np.zeros((len(splits), internal_classes))
    for k1, split in enumerate(splits):
        for k2, probability in split.items():
            if not 1 <= k2 <= internal_classes:
                raise DimensionError(f"Internal class {k2} outside 1..{internal_classes}")
            matrix[k1, k2 - 1] = probability
    return matrix


@dataclass(frozen=True)
class DegreeDistribution:
    """
    Repetition-count distribution Lambda(x) = sum_l Lambda_l x^l of one class.

    Coefficients are stored lowest degree first and must sum to 1.
    """

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coefficients = tuple(float(c) for c in self.coefficients)
        if not coefficients:
            raise ValueError("Degree distribution needs at least one coefficient")
        if any(c < 0 for c in coefficients):
            raise ValueError(f"Degree probabilities must be non-negative: {coefficients}")
        if abs(sum(coefficients) - 1.0) > 1e-12:
            raise ValueError(f"Degree probabilities sum to {sum(coefficients)!r}, not 1")
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def from_coefficients(cls, coefficients: Sequence[float]) -> "DegreeDistribution":
        return cls(tuple(coefficients))

    @classmethod
    def regular(cls, L: int) -> "DegreeDistribution":
        """Every packet is sent exactly L times: Lambda(x) = x^L."""
        if L < 0:
            raise ValueError(f"Repetition count must be non-negative, got {L}")
        return cls((0.0,) * L + (1.0,))

    @property
    def max_degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def mean(self) -> float:
        """Lambda'(1)."""
        return float(P.polyval(1.0, P.polyder(self.coefficients)))

    def generating(self, x: float | np.ndarray) -> float | np.ndarray:
        """Lambda(x)."""
        return P.polyval(x, self.coefficients)

    def edge(self, x: float | np.ndarray) -> float | np.ndarray:
        """lambda(x) = Lambda'(x) / Lambda'(1); identically 1 for a class that never transmits."""
        mean = self.mean
        if mean == 0:
            return np.ones_like(np.asarray(x, dtype=float))[()]
        return P.polyval(x, P.polyder(self.coefficients)) / mean

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw `size` repetition counts."""
        return rng.choice(len(self.coefficients), size=size, p=np.asarray(self.coefficients))


@dataclass
class DEState:
    """q^(i) and the success probabilities P~^(i) after iteration i."""

    iteration: int
    q: np.ndarray
    psuc: np.ndarray


@dataclass
class DETrace:
    """Full density-evolution run."""

    states: list[DEState] = field(default_factory=list)
    converged: bool = False

    @property
    def final(self) -> DEState:
        return self.states[-1]

    @property
    def psuc(self) -> np.ndarray:
        return self.final.psuc

    @property
    def error(self) -> np.ndarray:
        return 1.0 - self.final.psuc

    def write_csv(self, path: Path | str) -> Path:
        K = len(self.final.q)
        header = (
            ["iteration"]
            + [f"q_{k}" for k in range(1, K + 1)]
            + [f"Psuc_{k}" for k in range(1, K + 1)]
        )
        rows = ([s.iteration, *s.q.tolist(), *s.psuc.tolist()] for s in self.states)
        return write_csv(path, header, rows)


def density_evolution(
    model: PoissonReceiverModel,
    G: Sequence[float] | np.ndarray,
    degrees: Sequence[DegreeDistribution],
    i_max: int = 100,
    tol: float = 1e-12,
    progress: Optional[Callable[[DEState], None]] = None,
) -> DETrace:
    """
    Iterate q^(i+1)_k = lambda_k(1 - P_suc,k(q^(i) * G * Lambda'(1))) from q^(0) = 1.

    After each step P~_k = 1 - Lambda_k(1 - P_suc,k(...)) is recorded with the
    q that produced it. Stops when the sup-norm change of q drops below `tol`
    or after `i_max` iterations; the latter is logged but not an error.

    Args:
        model: K-class Poisson receiver of one slot
        G: Users per slot for each class
        degrees: One degree distribution per class
        i_max: Iteration cap
        tol: Convergence threshold on q
        progress: Called with every new state

    Returns:
        DETrace with state 0 (q = 1, nothing decoded) followed by one state per iteration
    """
    G = _as_rho(G, model.dimension)
    if len(degrees) != model.dimension:
        raise DimensionError(f"Need {model.dimension} degree distributions, got {len(degrees)}")
    if i_max < 1:
        raise ValueError(f"i_max must be at least 1, got {i_max}")

    means = np.array([d.mean for d in degrees])
    q = np.ones(model.dimension)
    trace = DETrace([DEState(0, q.copy(), np.zeros(model.dimension))])

    for i in range(1, i_max + 1):
        p = model.psuc(q * G * means)
        q_next = np.array([d.edge(1.0 - p_k) for d, p_k in zip(degrees, p)], dtype=float)
        psuc = np.array([1.0 - d.generating(1.0 - p_k) for d, p_k in zip(degrees, p)], dtype=float)
        state = DEState(i, np.clip(q_next, 0.0, 1.0), np.clip(psuc, 0.0, 1.0))
        trace.states.append(state)
        if progress:
            progress(state)

        change = float(np.max(np.abs(state.q - q)))
        q = state.q
        logger.debug("DE iteration %d: q=%s change=%.3e", i, q.tolist(), change)
        if change < tol:
            trace.converged = True
            break

    if not trace.converged:
        logger.warning("Density evolution for %s stopped at i_max=%d without meeting tol=%g", model.name, i_max, tol)
    return trace
