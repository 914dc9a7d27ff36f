"""Multirate GARK time integrators and scheme analysis."""

__version__ = "0.1.0"
