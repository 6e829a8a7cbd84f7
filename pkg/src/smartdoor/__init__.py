"""Simulated face-recognition smart door."""

__version__ = "0.1.0"
