"""alohacalc - ALOHA receiver calculus, Poisson receivers and SIC simulation."""

__version__ = "0.1.0"
