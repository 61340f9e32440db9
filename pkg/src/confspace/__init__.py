"""Poisson measures on configuration spaces over R^k and Q_p^k."""

__version__ = "0.1.0"
