"""Certified zeros of exponential systems and iterated exponential polynomials."""

__version__ = "0.1.0"
