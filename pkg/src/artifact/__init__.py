"""Approximation ratios and rounding schemes for Lin-2-k constraint satisfaction."""

__version__ = "0.1.0"
