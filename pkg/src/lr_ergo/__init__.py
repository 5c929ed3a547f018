"""Finite-volume numerics for Lieb-Robinson bounds and space-time ergodic averages on quantum spin lattices."""

__version__ = "0.1.0"
