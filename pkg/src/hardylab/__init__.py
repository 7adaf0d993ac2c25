"""Numerical laboratory for weighted Hardy-type inequalities on epigraph domains."""

__version__ = "0.1.0"
