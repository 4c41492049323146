"""Trade-off-function accounting for mixture mechanisms.

Modules:
  numeric: log-space binomial and Gaussian special functions.
  tradeoff: piecewise-linear trade-off curves, conjugates, conversions.
  mixture: joint-concavity lower bounds for mixtures.
  shuffle: shuffled randomized response accountant.
  dpgd: one-step DP-GD with random initialization.
  oracle: brute-force ground truth on finite pairs.
  cli: command-line entry point.
"""

__version__ = '0.1.0'
