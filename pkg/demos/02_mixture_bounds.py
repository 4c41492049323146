"""Bounding a mixture by its components.

A mixture mechanism picks a component at random and hides the choice.
Revealing the choice can only help an attacker, so the revealed curve
(joint concavity) lower-bounds the true one. When both components share
a structure there is a sharper two-component bound built from convex
conjugates. This demo compares both against exact enumeration.

Run: python demos/02_mixture_bounds.py
"""

import numpy as np

from mixfdp import cli, mixture, oracle, shuffle, tradeoff
from mixfdp.mixture import ComponentCurve


def exact(p, q):
  return oracle.exact_tradeoff(oracle.DiscretePair.from_probs(p, q))


# A two-component mixture on three atoms.
p1, q1 = np.array([0.2, 0.5, 0.3]), np.array([0.4, 0.4, 0.2])
p2, q2 = np.array([0.6, 0.1, 0.3]), np.array([0.1, 0.3, 0.6])
w = (0.4, 0.6)
revealed = mixture.joint_concavity_curve(
    [ComponentCurve(exact(p1, q1), w[0]), ComponentCurve(exact(p2, q2), w[1])])
hidden = exact(w[0] * p1 + w[1] * p2, w[0] * q1 + w[1] * q2)
x = np.linspace(0, 1, 6)
print('alpha   revealed  exact mixture')
for a, r, h in zip(x, revealed(x), hidden(x)):
  print(f'{a:.1f}     {r:.4f}    {h:.4f}')

# The gap closes exactly when all components agree on the likelihood
# ratio at every shared atom.
rep = mixture.ratio_agreement([(p1, q1), (p2, q2)], w)
print(f'ratios agree: {rep.holds} (spread {rep.max_deviation:.3g})')

# Shuffle-shaped mixture: P = (1-w)P0 + wQ0, Q = (1-w)Q0 + wP0 with
# w = 1/3 and P0, Q0 the base pair of a 100-user shuffle. The plain bound
# treats the mixture weight as unhelpful; the advanced bound uses it.
vals = cli.fig2_values()
print(f"\ndelta(0.5): plain {vals['plain']:.3g}, "
      f"advanced {vals['advanced']:.3g}")

# For this shape the advanced bound reduces to C(2w Id + (1-2w) f0), a
# symmetric curve that any (eps, delta) query can read directly.
f0 = shuffle.base_knots(shuffle.ShuffleParams(100, np.log(2)), 'all')
adv = mixture.advanced_shuffle_bound(f0, 1 / 3)
tradeoff.check_curve(adv)
print(f'advanced shuffle curve symmetric: {adv.is_symmetric(1e-9)}')
