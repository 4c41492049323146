"""Shared generators for random finite pairs and curves."""

import numpy as np
from hypothesis import strategies as st

from mixfdp import oracle, tradeoff


def random_pmf(rng, size, zero_prob=0.0):
  p = rng.dirichlet(np.ones(size))
  if zero_prob:
    p = np.where(rng.random(size) < zero_prob, 0.0, p)
    if p.sum() == 0:
      p[rng.integers(size)] = 1.0
    p = p / p.sum()
  return p


def random_pair(rng, size=3, zero_prob=0.0):
  """A DiscretePair with no atom empty under both distributions."""
  while True:
    p = random_pmf(rng, size, zero_prob)
    q = random_pmf(rng, size, zero_prob)
    if np.all((p > 0) | (q > 0)):
      return oracle.DiscretePair.from_probs(p, q)


def random_curve(rng, size=5):
  """Exact trade-off curve of a random pair, so always valid."""
  return oracle.exact_tradeoff(random_pair(rng, size))


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def random_min_branch_curve(rng, size=5):
  """A random exact curve whose symmetrization keeps its left part."""
  while True:
    f = random_curve(rng, size)
    a, b = f.extended()
    k = tradeoff._xbar(f)
    if a[k] <= b[k]:
      return f
