"""Charts from eedqn epoch CSVs: reward curves and Q-ratio overestimation views."""

__version__ = "0.1.0"
