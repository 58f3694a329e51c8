"""Numerics for the average singular value of complex Gaussian matrices."""
from .asv_core import ALPHA_ONE, LIMIT, Route, alpha_complex, alpha_difference, asv_table, i1, i2

__version__ = "0.1.0"

__all__ = ["ALPHA_ONE", "LIMIT", "Route", "alpha_complex", "alpha_difference", "asv_table", "i1", "i2"]
