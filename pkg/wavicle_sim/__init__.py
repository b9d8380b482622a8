"""wavicle-sim - Monte Carlo wavicle model of two-source detector correlations."""

__version__ = "0.1.0"
