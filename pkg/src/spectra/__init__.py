"""Certified spectral covers and their size and dimension functionals."""
__version__ = "0.1.0"
