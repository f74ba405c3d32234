"""Numerical toolkit for the Weyl-Moyal star product on phase space."""

__version__ = "0.1.0"
