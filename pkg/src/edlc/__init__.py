"""Compiler and runtime for the PDE Equation Description Language (EDL)."""

__version__ = "0.1.0"
