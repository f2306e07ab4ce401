"""Weak-form entropy-consistent neural solvers for 1D conservation laws."""

__version__ = "0.1.0"
