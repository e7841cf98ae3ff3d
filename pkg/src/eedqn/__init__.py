"""Ensemble + elastic-step deep Q-learning lab, small enough for a desk."""

__version__ = "0.1.0"
