"""Shuffled randomized response: how much privacy does shuffling buy?

Ten thousand users each answer with randomized response at a local budget
eps0 = 4.444, which on its own is a weak guarantee. After a uniform
shuffle the central guarantee is far stronger. This walk-through computes
that guarantee three ways and checks they line up.

Run: python demos/01_shuffle_amplification.py
"""

import math

from mixfdp import oracle, shuffle, tradeoff

params = shuffle.ShuffleParams(n=10000, eps0=4.444)
print(f'n = {params.n}, eps0 = {params.eps0}, w = {params.w:.4g}')

# 1. The amplified trade-off curve. It is a symmetrized mixture of the
# identity and the base curve T(P0, Q0), whose knots have a closed form.
curve = shuffle.shuffle_curve(params, shuffle.Grid())
tradeoff.check_curve(curve)
print(f'amplified curve: {len(curve)} knots, f(0.5) = {curve(0.5):.6f}')

# 2. Reading (eps, delta) pairs off the curve. delta(eps) has a closed
# form as a finite sum; epsilon(delta) inverts it by bracketing.
print('\n eps    delta(eps)')
for eps in (0.5, 0.7, 1.0):
  print(f' {eps:.1f}   {shuffle.shuffle_delta(params, eps):.3g}')
print('\n delta   epsilon(delta)')
for delta in (5e-5, 3e-6, 9e-11):
  print(f' {delta:.0e}  {shuffle.shuffle_epsilon(params, delta):.4f}')

# 3. Ground truth. The pair (P, Q) has about n^2 / 2 atoms, few enough
# to enumerate. Its exact epsilon at delta = 3e-6 must not exceed the
# bound above, and here it falls just below it.
pair = oracle.build_shuffle_pair(params)
exact = oracle.exact_epsilon(pair, 3e-6)
bound = shuffle.shuffle_epsilon(params, 3e-6)
print(f'\nexact pair: {len(pair)} atoms')
print(f'eps at delta=3e-6: exact {exact:.4f} <= bound {bound:.4f}')
hs = oracle.exact_hockey_stick(pair, math.exp(0.5))
print(f'H_(e^0.5)(P||Q) = {hs:.3g} <= delta(0.5) = '
      f'{shuffle.shuffle_delta(params, 0.5):.3g}')
