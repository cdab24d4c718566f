"""Data-augmentation, sandwich and label-switching Markov chains for
Bayesian mixtures, with exact and Monte Carlo spectral analysis."""

__version__ = "0.1.0"
