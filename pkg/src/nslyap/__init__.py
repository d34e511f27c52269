"""Numerical tools for Lyapunov pairs and invariance of x' in f(x) - A x with A maximally monotone."""

__version__ = "0.1.0"
