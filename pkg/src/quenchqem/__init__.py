"""XXZ quench simulation with error mitigation and randomized-measurement entropy."""

__version__ = "0.1.0"
