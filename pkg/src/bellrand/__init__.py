"""Certified randomness from Bell-test trial data."""

__version__ = "0.1.0"
