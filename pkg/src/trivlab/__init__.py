"""Numerical laboratory for triviality, renormalizability and strong-coupling confinement."""

__version__ = "0.1.0"
