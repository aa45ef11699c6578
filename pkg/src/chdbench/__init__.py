"""Benchmarking binary classifiers on the Framingham CHD data.

Gaussian discriminants and Double Discriminant Scoring, the
training-prevalence cutoff for probability models, four training/testing
split scenarios, paired Monte Carlo comparisons and greedy variable
hierarchies.
"""

__version__ = "0.1.0"
