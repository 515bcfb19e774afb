"""Rational approximation with numerators and denominators in arithmetic progressions."""

__version__ = "1.0.0"
