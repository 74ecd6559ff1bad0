"""Numerical laboratory for m-Bakry-Emery Ricci geometry."""

__version__ = "0.1.0"
