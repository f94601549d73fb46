"""Covariances and CLT diagnostics for intrinsic volumes of Boolean models with ball grains."""

__version__ = "0.1.0"
