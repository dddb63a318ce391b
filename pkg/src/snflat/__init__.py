"""Systematic normal form of lattices and a worst-to-average-case reduction to rank-1 SIS."""

__version__ = "0.1.0"
