"""Power-divergence goodness-of-fit statistics for uniform data."""

__version__ = "0.1.0"
