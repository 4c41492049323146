"""Brute-force ground truth for finite distribution pairs.

Everything here works from explicit probability tables. It deliberately
avoids the closed forms in ``shuffle`` and the log-space helpers in
``numeric``: binomial masses come from ``scipy.stats``, trade-off curves
come from sorting atoms by likelihood ratio (Neyman-Pearson), and
hockey-stick divergences are plain sums of positive parts.
"""

import dataclasses
import math
from typing import Optional, Tuple

import numpy as np
from scipy import optimize, special, stats

from mixfdp import tradeoff

SHUFFLE_PAIR_CAP = 20000
# Components whose mixture weight is below this are dropped: their atoms
# would be subnormal and cannot move any reported quantity.
PRUNE_LOG_WEIGHT = math.log(1e-300)
TIE_ATOL = 1e-14


@dataclasses.dataclass(frozen=True, eq=False)
class DiscretePair:
  """Two pmfs on a shared finite support, stored as log-masses.

  Attributes:
    log_p: log P(atom), -inf for zero mass.
    log_q: log Q(atom).
    ratio_num: Optional integer key. When given with ``ratio_den``, p/q is
      a strictly increasing function of ratio_num / ratio_den, and atoms
      with the same reduced fraction share one likelihood ratio.
    ratio_den: See ``ratio_num``.
    dropped_mass: Upper bound on mass removed before construction.
  """
  log_p: np.ndarray
  log_q: np.ndarray
  ratio_num: Optional[np.ndarray] = None
  ratio_den: Optional[np.ndarray] = None
  dropped_mass: float = 0.0

  def __post_init__(self):
    lp = np.asarray(self.log_p, dtype=np.float64)
    lq = np.asarray(self.log_q, dtype=np.float64)
    if lp.shape != lq.shape or lp.ndim != 1:
      raise ValueError('log_p and log_q must be 1-D of equal length')
    if np.any(np.isneginf(lp) & np.isneginf(lq)):
      raise ValueError('an atom has zero mass under both distributions')
    if np.any(lp > 1e-12) or np.any(lq > 1e-12):
      raise ValueError('log-masses must be <= 0')
    # Per-atom log-pmf rounding accumulates over large supports.
    tol = 1e-12 + self.dropped_mass + 4e-16 * lp.size
    for name, arr in (('P', lp), ('Q', lq)):
      total = math.exp(special.logsumexp(arr))
      if abs(total - 1.0) > tol:
        raise ValueError(f'{name} sums to {total!r}, not 1')
    object.__setattr__(self, 'log_p', lp)
    object.__setattr__(self, 'log_q', lq)

  @classmethod
  def from_probs(cls, p, q) -> 'DiscretePair':
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    with np.errstate(divide='ignore'):
      return cls(np.log(p), np.log(q))

  @property
  def p(self) -> np.ndarray:
    return np.exp(self.log_p)

  @property
  def q(self) -> np.ndarray:
    return np.exp(self.log_q)

  def __len__(self):
    return self.log_p.size

  def swap(self) -> 'DiscretePair':
    return DiscretePair(self.log_q, self.log_p, self.ratio_den,
                        self.ratio_num, self.dropped_mass)


def _shuffle_arrays(n, eps0):
  """Per-atom (a, b, log p0, log q0) for the base pair, pruned."""
  w = 1.0 / (math.exp(eps0) + 1.0)
  p_c = 2.0 * w
  i = np.arange(n)
  log_wi = stats.binom.logpmf(i, n - 1, p_c)
  keep = log_wi >= PRUNE_LOG_WEIGHT
  dropped = float(np.exp(special.logsumexp(log_wi[~keep]))) if np.any(
      ~keep) else 0.0
  a_list, b_list, lp_list, lq_list = [], [], [], []
  for ii in i[keep]:
    a = np.arange(ii + 2)
    # (A+1, i-A) ~ P0 and (A, i+1-A) ~ Q0 with A ~ Binom(i, 1/2).
    lp = stats.binom.logpmf(a - 1, ii, 0.5) + log_wi[ii]
    lq = stats.binom.logpmf(a, ii, 0.5) + log_wi[ii]
    a_list.append(a)
    b_list.append(ii + 1 - a)
    lp_list.append(lp)
    lq_list.append(lq)
  return (w, np.concatenate(a_list), np.concatenate(b_list),
          np.concatenate(lp_list), np.concatenate(lq_list), dropped)


def build_shuffle_pair(params, base: bool = False) -> DiscretePair:
  """Enumerates the shuffle dominating pair over atoms (a, b), a + b = i + 1.

  Args:
    params: Object with ``n`` and ``eps0`` (e.g. ``shuffle.ShuffleParams``).
    base: Return the base pair (P0, Q0) instead of the mixed pair
      P = (1 - w) P0 + w Q0, Q = (1 - w) Q0 + w P0.

  Returns:
    A DiscretePair keyed by the integer ratio a / b.

  Raises:
    ValueError: If n exceeds the enumeration cap.
  """
  n = int(params.n)
  if n < 1 or n > SHUFFLE_PAIR_CAP:
    raise ValueError(f'n must lie in [1, {SHUFFLE_PAIR_CAP}], got {n}')
  w, a, b, lp0, lq0, dropped = _shuffle_arrays(n, float(params.eps0))
  g = np.gcd(a, b)
  num, den = a // g, b // g
  if base:
    return DiscretePair(lp0, lq0, num, den, dropped)
  lw, l1w = math.log(w), math.log1p(-w)
  lp = np.logaddexp(l1w + lp0, lw + lq0)
  lq = np.logaddexp(l1w + lq0, lw + lp0)
  return DiscretePair(lp, lq, num, den, dropped)


def _group_order(pair: DiscretePair) -> Tuple[np.ndarray, np.ndarray]:
  """Returns (order, group_starts) with atoms sorted by ascending p/q."""
  if pair.ratio_num is not None:
    num = np.asarray(pair.ratio_num, dtype=np.int64)
    den = np.asarray(pair.ratio_den, dtype=np.int64)
    with np.errstate(divide='ignore'):
      val = np.where(den == 0, np.inf, num / np.where(den == 0, 1, den))
    order = np.lexsort((den, num, val))
    n_s, d_s = num[order], den[order]
    new = np.ones(order.size, dtype=bool)
    new[1:] = (n_s[1:] != n_s[:-1]) | (d_s[1:] != d_s[:-1])
    return order, np.flatnonzero(new)
  with np.errstate(invalid='ignore'):
    key = pair.log_p - pair.log_q
  order = np.argsort(key, kind='stable')
  k = key[order]
  new = np.ones(order.size, dtype=bool)
  with np.errstate(invalid='ignore'):
    gap = np.diff(k)
  same = (k[1:] == k[:-1]) | (np.isfinite(gap) & (gap <= TIE_ATOL))
  new[1:] = ~same
  return order, np.flatnonzero(new)


def exact_tradeoff(pair: DiscretePair) -> tradeoff.PiecewiseLinearTradeoff:
  """Exact T(P, Q) by the Neyman-Pearson construction.

  Atoms are visited in decreasing q/p. Rejecting a whole group adds its
  P-mass to alpha and removes its Q-mass from beta; randomizing inside a
  group traces the segment between consecutive knots.
  """
  order, starts = _group_order(pair)
  p = np.exp(pair.log_p[order])
  q = np.exp(pair.log_q[order])
  pg = np.add.reduceat(p, starts)
  qg = np.add.reduceat(q, starts)
  alpha = np.concatenate([[0.0], np.cumsum(pg)])
  tail_q = np.concatenate([np.cumsum(qg[::-1])[::-1], [0.0]])
  return tradeoff.PiecewiseLinearTradeoff.from_points(
      np.clip(alpha, 0, 1), np.clip(tail_q, 0, 1))


def exact_hockey_stick(pair: DiscretePair, gamma: float) -> float:
  """H_gamma(P || Q) = sum_x (p(x) - gamma q(x))_+, summed in log space."""
  if not gamma >= 1.0:
    raise ValueError(f'gamma must be >= 1, got {gamma}')
  lg = math.log(gamma)
  with np.errstate(invalid='ignore'):
    diff = pair.log_p - pair.log_q
  pos = diff > lg
  if not np.any(pos):
    return 0.0
  lp = pair.log_p[pos]
  with np.errstate(divide='ignore'):
    terms = lp + np.log1p(-np.exp(lg + pair.log_q[pos] - lp))
  return float(min(1.0, math.exp(special.logsumexp(terms))))


def exact_epsilon(pair: DiscretePair, delta: float, xtol: float = 1e-10):
  """Smallest eps with H_{e^eps}(P || Q) <= delta, by bracketing on log gamma.

  Returns:
    eps, or 0.0 if H_1 <= delta already.

  Raises:
    ValueError: If delta is outside (0, 1) or unreachable (atoms with q = 0
      carry more than delta of P-mass).
  """
  if not 0 < delta < 1:
    raise ValueError('delta must lie in (0, 1)')
  if exact_hockey_stick(pair, 1.0) <= delta:
    return 0.0
  with np.errstate(invalid='ignore'):
    diff = pair.log_p - pair.log_q
  finite = diff[np.isfinite(diff)]
  if np.any(np.isposinf(diff)):
    if math.exp(special.logsumexp(pair.log_p[np.isposinf(diff)])) >= delta:
      raise ValueError('delta is below the mass with q = 0')
  hi = max(float(finite.max()), 0.0) + 1e-9
  fn = lambda e: exact_hockey_stick(pair, math.exp(e)) - delta
  if fn(hi) > 0:
    return hi
  return optimize.brentq(fn, 0.0, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)


def sampled_delta_lower_bound(pair: DiscretePair, gamma: float, draws: int,
                              seed: int, confidence: float = 0.95) -> float:
  """Monte Carlo attack estimate of H_gamma with a Clopper-Pearson bound.

  Uses the optimal region {p > gamma q}, estimates its P- and Q-mass from
  ``draws`` samples each, and returns a one-sided lower confidence bound
  on P(S) - gamma Q(S). Only for parity with sampling-based audits; the
  exact sum is the default oracle.
  """
  rng = np.random.default_rng(seed)
  with np.errstate(invalid='ignore'):
    region = (pair.log_p - pair.log_q) > math.log(gamma)
  p, q = pair.p, pair.q
  kp = int(region[rng.choice(p.size, size=draws, p=p / p.sum())].sum())
  kq = int(region[rng.choice(q.size, size=draws, p=q / q.sum())].sum())
  a = (1 - confidence) / 2
  p_lo = stats.beta.ppf(a, kp, draws - kp + 1) if kp > 0 else 0.0
  q_hi = stats.beta.ppf(1 - a, kq + 1, draws - kq) if kq < draws else 1.0
  return max(0.0, float(p_lo - gamma * q_hi))
