"""Volumetric spline models, finite cell analysis and periodic homogenization."""

__version__ = "0.1.0"
