"""Numerical laboratory for Delaunay unduloid profiles and their forced perturbations."""

__version__ = "0.1.0"
