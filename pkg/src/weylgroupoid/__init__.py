"""Strict Weyl quantization on duals of Lie algebroids, checked numerically."""

__version__ = "0.1.0"
