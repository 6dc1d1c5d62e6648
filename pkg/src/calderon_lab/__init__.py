"""Numerical laboratory for Calderon commutators, shifted dyadic operators and bi-parameter model forms."""
__version__ = "0.1.0"
