"""Causal localization kernels for massive scalar particles."""
__version__ = "0.1.0"
