"""Verification toolkit for nonlinear regularity models on finite structures."""

__version__ = "0.1.0"
