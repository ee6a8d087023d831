"""Quadratic fluctuations of symmetric simple exclusion: lattice and continuum laboratory."""

__version__ = "0.1.0"
