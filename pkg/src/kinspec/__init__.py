"""Spectral analysis and hydrodynamic-limit experiments for linearized kinetic models."""

__version__ = "0.1.0"
