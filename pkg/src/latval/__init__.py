"""Valuations on discretized Banach function lattices."""

__version__ = "0.1.0"
