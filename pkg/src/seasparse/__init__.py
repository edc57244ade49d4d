"""Sparse support recovery with the support exploration algorithm (SEA)."""
__version__ = "0.1.0"
