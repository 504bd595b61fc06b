"""Numerical spectral-perturbation laboratory."""

__version__ = "0.1.0"
