"""Core modules for alohacalc."""

from .algebra import SuccessEvaluator, VerificationBox, verify_properties
from .config import RunConfig
from .poisson import PoissonReceiverModel, density_evolution, induce
from .topology import BipartiteTopology

__all__ = [
    "BipartiteTopology",
    "PoissonReceiverModel",
    "RunConfig",
    "SuccessEvaluator",
    "VerificationBox",
    "density_evolution",
    "induce",
    "verify_properties",
]
