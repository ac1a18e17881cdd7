"""Numerical companion for escaping Fatou components of meromorphic functions."""

__version__ = "0.1.0"
