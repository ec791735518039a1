"""Biventricular infarct scenario simulation and QRS sensitivity analysis."""

__version__ = "0.1.0"
