"""Exact simulation and generator-level verification of kinetic PDMP samplers."""

__version__ = "0.1.0"
