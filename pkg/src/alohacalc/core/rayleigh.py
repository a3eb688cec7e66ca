"""
Rayleigh block fading with capture and SIC.

Received powers are i.i.d. Exp(1) (scaled by the SNR gamma). The receiver
decodes the strongest remaining signal while its SINR is at least b, cancels
it and repeats. Everything is evaluated in log space so large loads do not
overflow (1+b)^(r*N).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .poisson import PoissonReceiverModel, TruncationError

logger = logging.getLogger(__name__)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass(frozen=True)
class CaptureParams:
    """
    Attributes:
        gamma: Linear SNR P / P_noise
        b: Linear SINR threshold
        n_max: Largest number of interferers summed in the capture series
        tail_tol: Upper bound accepted for the dropped tail of the series
    """

    gamma: float
    b: float
    n_max: int = 200
    tail_tol: float = 1e-13

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"SNR gamma must be positive, got {self.gamma}")
        if not self.b > 0:
            raise ValueError(f"SINR threshold b must be positive, got {self.b}")
        if self.n_max < 0:
            raise ValueError(f"n_max must be non-negative, got {self.n_max}")

    @classmethod
    def from_db(cls, gamma_db: float, b_db: float, **kwargs) -> "CaptureParams":
        return cls(db_to_linear(gamma_db), db_to_linear(b_db), **kwargs)

    @property
    def log_base(self) -> float:
        """log(1 + b)."""
        return math.log1p(self.b)


def _check_order(N: int, r: int) -> None:
    if N < 0 or not 0 <= r <= N:
        raise ValueError(f"Need 0 <= r <= N, got N={N}, r={r}")


def _log_ordered(N: int, r: int, p: CaptureParams) -> float:
    growth = math.expm1(r * p.log_base)
    return -growth / p.gamma - r * (N - 1 - (r - 1) / 2) * p.log_base


def ordered_capture_prob(N: int, r: int, p: CaptureParams) -> float:
    """P(signals 1..r of N are decoded in exactly that order)."""
    _check_order(N, r)
    if r == 0:
        return 1.0
    return math.exp(_log_ordered(N, r, p))


def at_least_r_prob(N: int, r: int, p: CaptureParams) -> float:
    """P(at least r of N signals are decoded): N!/(N-r)! orderings of the ordered event."""
    _check_order(N, r)
    if r == 0:
        return 1.0
    log_orderings = gammaln(N + 1) - gammaln(N - r + 1)
    return float(math.exp(log_orderings + _log_ordered(N, r, p)))


def expected_decoded(N: int, p: CaptureParams) -> float:
    """E[decoded] = sum_r P(at least r decoded)."""
    if N < 0:
        raise ValueError(f"Need N >= 0, got {N}")
    return sum(at_least_r_prob(N, r, p) for r in range(1, N + 1))


def poisson_tail_bound(rho: float, n: int) -> float:
    """
    Chernoff bound on P(X > n) for X ~ Poisson(rho).

    P(X >= m) <= exp(-rho) (e rho / m)^m for m > rho; returns 1 where the
    bound does not apply.
    """
    m = n + 1
    if rho == 0:
        return 0.0
    if m <= rho:
        return 1.0
    return math.exp(-rho + m * (1 + math.log(rho) - math.log(m)))


@dataclass(frozen=True)
class CaptureSeries:
    """A truncated evaluation of the capture success probability."""

    value: float
    terms: int
    tail_bound: float


def capture_series(rho: float, p: CaptureParams) -> CaptureSeries:
    """
    Success probability of a tagged packet among Poisson(rho) interferers.

    Sums over t interferers and the number tau of them decoded before the
    tagged one. For fixed t the inner sum is the conditional success
    probability times Pois(t; rho), so the dropped remainder is at most
    P(X > t_max), which the Chernoff bound controls.

    Raises:
        ValueError: If rho is negative
        TruncationError: If the tail bound needs more than n_max interferers
    """
    if rho < 0 or not math.isfinite(rho):
        raise ValueError(f"Offered load must be finite and non-negative, got {rho}")

    t_max = next(
        (n for n in range(int(rho), p.n_max + 1) if poisson_tail_bound(rho, n) <= p.tail_tol),
        None,
    )
    if t_max is None:
        raise TruncationError(
            f"Capture series at rho={rho} needs more than n_max={p.n_max} terms for tail {p.tail_tol:g}"
        )

    t = np.arange(t_max + 1, dtype=float)[:, None]
    tau = np.arange(t_max + 1, dtype=float)[None, :]
    valid = tau <= t
    with np.errstate(over="ignore", invalid="ignore"):
        growth = np.expm1((tau + 1) * p.log_base)
        log_terms = (
            -rho
            + xlogy(t, rho)
            - gammaln(np.where(valid, t - tau, 0) + 1)
            - growth / p.gamma
            - (tau + 1) * (t - tau / 2) * p.log_base
        )
        terms = np.where(valid, np.exp(log_terms), 0.0)

    value = float(np.clip(terms.sum(), 0.0, 1.0))
    bound = poisson_tail_bound(rho, t_max)
    logger.debug("capture series at rho=%g: %d terms, tail <= %.2e", rho, t_max + 1, bound)
    return CaptureSeries(value, t_max + 1, bound)


def capture_psuc(rho: float, p: CaptureParams) -> float:
    return capture_series(rho, p).value


def rayleigh_model(p: CaptureParams, classes: int = 1) -> PoissonReceiverModel:
    """
    K classes sharing one capture receiver.

    Classes are indistinguishable on the channel, so every class sees the
    single-class success probability at the total load.
    """
    if classes < 1:
        raise ValueError(f"Need at least one class, got {classes}")

    def psuc(rho: np.ndarray) -> np.ndarray:
        return np.full(classes, capture_psuc(float(rho.sum()), p))

    return PoissonReceiverModel(classes, psuc, f"rayleigh[gamma={p.gamma:g},b={p.b:g}]")
