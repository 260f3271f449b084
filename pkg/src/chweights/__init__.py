"""Exact weight and triangulation bookkeeping for trianguline (phi, Gamma)-modules."""

__version__ = "0.1.0"
