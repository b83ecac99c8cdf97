"""Darboux-frame geometry of curves on surfaces and invariance checks."""

__version__ = "0.1.0"
