"""Spectral toolkit for the final value heat conduction problem."""

__version__ = "0.1.0"
