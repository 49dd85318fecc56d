"""Jerk-controlled predictive tracking of human handwriting motion."""

__version__ = "0.1.0"
