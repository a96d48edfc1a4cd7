"""Numerical convex geometry for measure slicing inequalities of L_p balls."""

__version__ = "0.1.0"
