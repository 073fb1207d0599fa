"""Information spreading on heterogeneous networks: mean-field, Monte Carlo and curve fitting."""

__version__ = "0.1.0"
