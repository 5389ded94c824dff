"""Numerics for central derivatives of Rankin-Selberg L-functions over real quadratic fields."""
__version__ = "0.1.0"
