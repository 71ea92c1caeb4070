"""Smooth-loop calculus on the unit complex numbers, quaternions and octonions."""

__version__ = "1.0.0"
