"""Generative maps from a Gaussian source to vector data.

The package builds supervised training pairs between a normal sample and a
data sample (rank pairing in 1D, greedy cosine matching in higher
dimensions), trains a small feedforward network on those pairs by plain MSE
regression, and verifies the resulting generator with classical two-sample
statistics.
"""

__version__ = "0.1.0"
