"""Certified decisions of complete monotonicity for log-polynomial functions."""

__version__ = "0.1.0"
