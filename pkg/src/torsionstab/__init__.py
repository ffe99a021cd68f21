"""Stability of linear systems read off the geometry of their trajectories."""

__version__ = "0.1.0"
