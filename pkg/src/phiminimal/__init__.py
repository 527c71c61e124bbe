"""Numerical verification of a quadratic entire solution to an anisotropic minimal surface equation in R^6."""

__version__ = "0.1.0"
