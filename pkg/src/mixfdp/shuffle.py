"""Shuffle-model accountant for shuffled epsilon0-DP randomized response.

The output of the shuffler on neighbouring datasets is a post-processing
of the pair

  P = (1 - w) P0 + w Q0,   Q = (1 - w) Q0 + w P0,   w = 1 / (e^eps0 + 1),

where, with C ~ Binom(n - 1, 2w) and A ~ Binom(C, 1/2), (A + 1, C - A) ~ P0
and (A, C - A + 1) ~ Q0. An atom (a, b) with a + b = i + 1 has likelihood
ratio p0/q0 = a/b, so T(P0, Q0) is piecewise linear with one knot per
distinct ratio, and both coordinates of each knot are binomial cdf sums.

The amplified guarantee is C(2w Id + (1 - 2w) T(P0, Q0)).
"""

import dataclasses
import functools
import math
from typing import Optional, Union

import numpy as np
from scipy import optimize

from mixfdp import _pool
from mixfdp import numeric
from mixfdp import tradeoff

ALL_KNOTS_CAP = 2000
DEFAULT_GRID = 4096
# Largest window end for which grid thresholds are drawn from the exact
# ratio set rather than a log-spaced grid.
RATIO_GRID_CAP = 3000
# exp() of anything larger overflows.
EPS_BRACKET_MAX = 700.0


class NonConvergence(RuntimeError):
  """Raised when a bracketing search cannot find its root."""


@dataclasses.dataclass(frozen=True)
class Window:
  """Retained index range lo <= i < hi of C ~ Binom(n - 1, pC).

  Attributes:
    lo: First retained i.
    hi: One past the last retained i.
    log_w: log P[C = i] for the retained i.
    tail_mass: Total mass of the dropped indices (<= truncation_tau).
  """
  lo: int
  hi: int
  log_w: np.ndarray = dataclasses.field(repr=False)
  tail_mass: float = 0.0

  @property
  def index(self) -> np.ndarray:
    return np.arange(self.lo, self.hi)


@dataclasses.dataclass(frozen=True)
class ShuffleParams:
  """n users, each applying eps0-DP randomized response before shuffling.

  Attributes:
    n: Number of users.
    eps0: Local privacy budget.
    truncation_tau: Largest binomial tail mass that may be dropped.
  """
  n: int
  eps0: float
  truncation_tau: float = 1e-15

  def __post_init__(self):
    if int(self.n) != self.n or self.n < 1:
      raise ValueError(f'n must be a positive integer, got {self.n}')
    if not self.eps0 > 0:
      raise ValueError(f'eps0 must be positive, got {self.eps0}')
    if not 0 <= self.truncation_tau < 1:
      raise ValueError('truncation_tau must lie in [0, 1)')
    object.__setattr__(self, 'n', int(self.n))
    object.__setattr__(self, 'eps0', float(self.eps0))

  @property
  def w(self) -> float:
    return 1.0 / (math.exp(self.eps0) + 1.0)

  @property
  def p_c(self) -> float:
    return 2.0 / (math.exp(self.eps0) + 1.0)

  @functools.cached_property
  def window(self) -> Window:
    n = self.n
    i = np.arange(n)
    lw = np.atleast_1d(numeric.binom_log_pmf(i, n - 1, self.p_c))
    if n == 1 or self.truncation_tau == 0:
      return Window(0, n, lw, 0.0)
    # left[k] = log sum_{j<k} w_j, right[k] = log sum_{j>=k} w_j
    left = np.concatenate([[-np.inf], np.logaddexp.accumulate(lw)])
    right = np.concatenate([np.logaddexp.accumulate(lw[::-1])[::-1],
                            [-np.inf]])
    cut = math.log(self.truncation_tau / 2)
    mode = int(np.argmax(lw))
    lo = int(np.flatnonzero(left[:mode + 1] <= cut).max())
    hi_cands = np.flatnonzero(right[mode + 1:] <= cut)
    hi = int(hi_cands.min()) + mode + 1
    tail = math.exp(left[lo]) + math.exp(right[hi])
    return Window(lo, hi, lw[lo:hi].copy(), tail)


@functools.lru_cache(maxsize=8)
def _cdf_tables(lo: int, hi: int):
  """Log cdf / survival of Binom(i, 1/2) for lo <= i < hi.

  Column s + 1 holds the value at s, for s = -1 .. hi, so any integer in
  that range indexes directly. Below the support the cdf is 0 (log -inf),
  from i upward it is 1.
  """
  width = hi + 2
  cdf = np.full((hi - lo, width), 0.0)
  sf = np.full((hi - lo, width), -np.inf)
  for r, i in enumerate(range(lo, hi)):
    cdf[r, 0] = -np.inf
    cdf[r, 1:i + 2] = numeric.binom_log_cdf_table(i, 0.5)
    sf[r, 0] = 0.0
    sf[r, 1:i + 2] = numeric.binom_log_sf_table(i, 0.5)
  cdf.setflags(write=False)
  sf.setflags(write=False)
  return cdf, sf


def _knots_at(params: ShuffleParams, num, den, t=None):
  """Prop-style knot coordinates (alpha, beta) at thresholds.

  Thresholds are exact ratios num/den (integer arithmetic for the floor)
  or, when ``t`` is given, real values.
  """
  win = params.window
  i = win.index
  cdf, sf = _cdf_tables(win.lo, win.hi)
  rows = np.arange(i.size)
  if t is None:
    num = np.asarray(num, dtype=np.int64)
    den = np.asarray(den, dtype=np.int64)
    s = (num[:, None] * i[None, :] - den[:, None]) // (num + den)[:, None]
  else:
    t = np.asarray(t, dtype=np.float64)
    s = np.floor((t[:, None] * i[None, :] - 1.0) / (1.0 + t[:, None]))
    s = s.astype(np.int64)
  s = np.clip(s, -1, i[None, :])
  la = win.log_w[None, :] + cdf[rows[None, :], s + 1]
  lb = win.log_w[None, :] + sf[rows[None, :], np.minimum(s + 2, cdf.shape[1] - 1)]
  return np.exp(la).sum(axis=1), np.exp(lb).sum(axis=1)


def _ratio_set(params: ShuffleParams):
  """Distinct reduced ratios a/b over the retained components, sorted."""
  win = params.window
  nums, dens = [], []
  for i in range(win.lo, win.hi):
    a = np.arange(i + 2)
    b = i + 1 - a
    g = np.gcd(a, b)
    nums.append(a // g)
    dens.append(b // g)
  num = np.concatenate(nums)
  den = np.concatenate(dens)
  key = np.unique(num.astype(np.int64) << 32 | den.astype(np.int64))
  num, den = key >> 32, key & 0xFFFFFFFF
  with np.errstate(divide='ignore'):
    val = np.where(den == 0, np.inf, num / np.maximum(den, 1))
  order = np.argsort(val, kind='stable')
  return num[order], den[order], val[order]


@dataclasses.dataclass(frozen=True)
class Grid:
  """Threshold policy: about K thresholds and a tangent envelope."""
  k: int = DEFAULT_GRID


Policy = Union[str, Grid, int, None]


def _resolve(params: ShuffleParams, thresholds: Policy, cap: int):
  if thresholds is None:
    return 'all' if params.n <= cap else Grid()
  if isinstance(thresholds, (int, np.integer)) and not isinstance(
      thresholds, bool):
    return Grid(int(thresholds))
  if thresholds == 'all' or isinstance(thresholds, Grid):
    return thresholds
  raise ValueError(f'unknown threshold policy {thresholds!r}')


def base_knots(params: ShuffleParams, thresholds: Policy = None,
               cap: int = ALL_KNOTS_CAP,
               threads: Optional[int] = None
               ) -> tradeoff.PiecewiseLinearTradeoff:
  """T(P0, Q0) from binomial cdf sums.

  alpha(t) = sum_i w_i F_i(s_i) and beta(t) = sum_i w_i (1 - F_i(s_i + 1))
  with s_i = floor((t i - 1) / (t + 1)) and F_i the Binom(i, 1/2) cdf.

  Args:
    params: Shuffle parameters.
    thresholds: 'all' evaluates every achievable ratio a/b (exact curve),
      ``Grid(K)`` or an int K takes K thresholds and returns the tangent
      envelope (a lower bound). Thresholds are K achievable ratios spread
      evenly by rank when the window is small, K log-spaced values
      otherwise. None picks 'all' for n <= cap.
    cap: Largest n accepted with 'all'.
    threads: Worker threads for the knot sums.

  Returns:
    The curve. Mass of truncated components is simply left out, which
    moves every knot down and to the left, so the curve stays a lower
    bound.

  Raises:
    ValueError: For 'all' with n > cap.
  """
  policy = _resolve(params, thresholds, cap)
  win = params.window
  imax = win.hi - 1
  if policy == 'all':
    if params.n > cap:
      raise ValueError(f"'all' thresholds need n <= {cap}, got {params.n}")
    num, den, _ = _ratio_set(params)
    chunk = max(1, 4_000_000 // max(1, win.hi - win.lo))
    parts = [(num[k:k + chunk], den[k:k + chunk])
             for k in range(0, num.size, chunk)]
    res = _pool.ordered_map(lambda nd: _knots_at(params, *nd), parts, threads)
    alpha = np.concatenate([r[0] for r in res])
    beta = np.concatenate([r[1] for r in res])
    return tradeoff.PiecewiseLinearTradeoff.from_points(
        np.concatenate([[0.0], alpha]), np.concatenate([[1.0], beta]))
  k = policy.k
  a0, b0 = _knots_at(params, [0], [1])
  a_end, _ = _knots_at(params, [1], [0])
  if win.hi > RATIO_GRID_CAP:
    t = np.geomspace(0.5 / max(imax, 1), max(imax, 1) * 2.0, k)
    a, b = _knots_at(params, None, None, t=t)
    return _envelope(a0, b0, a_end, a, b, t, imax)
  # Achievable ratios spread evenly by rank: each hits a distinct exact
  # knot and its line contains a segment of the curve. Knots whose mass
  # is below the curve's resolution merge, so sample more densely until K
  # knots survive or the ratio set is exhausted.
  num, den, val = _ratio_set(params)
  inner = (num > 0) & (den > 0)
  num, den, val = num[inner], den[inner], val[inner]
  if val.size == 0:
    return _envelope(a0, b0, a_end, [], [], np.ones(0), imax)
  m = k
  while True:
    pick = np.unique(np.linspace(0, val.size - 1, m).round().astype(np.int64))
    a, b = _knots_at(params, num[pick], den[pick])
    curve = _envelope(a0, b0, a_end, a, b, val[pick], imax)
    if len(curve) >= k or pick.size == val.size:
      return curve
    m = min(2 * m, val.size)


def _envelope(a0, b0, a_end, a, b, t, imax):
  # Exact end knots: t = 0 (first segment slope -imax) and t = inf.
  alpha = np.concatenate([a0, a, a_end])
  beta = np.concatenate([b0, b, [0.0]])
  slope = np.concatenate([[-float(max(imax, 1))], -1.0 / t, [0.0]])
  return tradeoff.tangent_envelope(alpha, beta, slope)


def shuffle_curve(params: ShuffleParams, thresholds: Policy = None,
                  cap: int = ALL_KNOTS_CAP, threads: Optional[int] = None
                  ) -> tradeoff.PiecewiseLinearTradeoff:
  """The amplified guarantee C(2w Id + (1 - 2w) T(P0, Q0))."""
  w = params.w
  base = base_knots(params, thresholds, cap, threads)
  f_s = tradeoff.mix_pointwise([tradeoff.identity(), base], [2 * w, 1 - 2 * w])
  return tradeoff.symmetrize(f_s)


@dataclasses.dataclass(frozen=True)
class ShuffleResult:
  """Result record for delta or epsilon queries."""
  n: int
  eps0: float
  query: str
  query_value: float
  result: float
  t_eps: float
  truncation_tau: float
  tail_mass: float

  def to_record(self) -> dict:
    return {
        'n': self.n,
        'eps0': self.eps0,
        self.query: self.query_value,
        'result': self.result,
        't_eps': self.t_eps,
        'truncation_tau': self.truncation_tau,
        'tail_mass': self.tail_mass,
    }


@functools.lru_cache(maxsize=16)
def _atom_table(n, eps0, tau):
  """Flattened Q0 atoms (i, a) of the retained window, with log q0."""
  params = ShuffleParams(n, eps0, tau)
  win = params.window
  ii, aa, lq = [], [], []
  for r, i in enumerate(range(win.lo, win.hi)):
    a = np.arange(i + 1)  # b = i + 1 - a >= 1
    ii.append(np.full(a.size, i))
    aa.append(a)
    lq.append(win.log_w[r] + numeric.binom_log_pmf(a, i, 0.5))
  ii = np.concatenate(ii)
  aa = np.concatenate(aa)
  lq = np.concatenate(lq)
  ratio = aa / (ii + 1 - aa)
  for arr in (ii, aa, lq, ratio):
    arr.setflags(write=False)
  return ii, aa, lq, ratio


def _delta_exact(params: ShuffleParams, eps: float):
  w = params.w
  c = math.exp(eps) - 2 * w
  tau = (1 - 2 * w) / c
  _, _, lq, ratio = _atom_table(params.n, params.eps0, params.truncation_tau)
  inc = ratio < tau
  if not np.any(inc):
    return params.window.tail_mass, tau
  # Every included atom contributes q0 ((1 - 2w) - c a/b) > 0, so the sum
  # has no cancellation.
  gain = np.log((1 - 2 * w) - c * ratio[inc])
  val = math.exp(numeric.logsumexp(lq[inc] + gain))
  return val + params.window.tail_mass, tau


def _corollary_slope(params: ShuffleParams, t_num, t_den):
  """-2w + (1 - 2w) l(t) with l(t) a ratio of binomial pmf sums."""
  win = params.window
  i = win.index
  s = (t_num * i - t_den) // (t_num + t_den)
  num = numeric.logsumexp(win.log_w + numeric.binom_log_pmf(s + 1, i, 0.5))
  den = numeric.logsumexp(win.log_w + numeric.binom_log_pmf(s, i, 0.5))
  if den == -math.inf:
    return -math.inf
  w = params.w
  return -2 * w - (1 - 2 * w) * math.exp(num - den)


def _delta_corollary(params: ShuffleParams, eps: float):
  num, den, val = _ratio_set(params)
  finite = den > 0
  num, den, val = num[finite], den[finite], val[finite]
  target = -math.exp(eps)
  lo, hi = -1, num.size - 1
  if _corollary_slope(params, int(num[hi]), int(den[hi])) < target:
    hi = num.size  # never reached; use the last finite knot
  # Smallest index with slope >= -e^eps, assuming monotone slopes.
  while hi - lo > 1:
    mid = (lo + hi) // 2
    if _corollary_slope(params, int(num[mid]), int(den[mid])) >= target:
      hi = mid
    else:
      lo = mid
  k = min(hi, num.size - 1)
  tn, td = int(num[k]), int(den[k])
  ii, aa, lq, ratio = _atom_table(params.n, params.eps0, params.truncation_tau)
  s = (tn * ii - td) // (tn + td)
  inc = aa <= s + 1
  w = params.w
  c = math.exp(eps) - 2 * w
  gain = (1 - 2 * w) - c * ratio[inc]
  lqi = lq[inc]
  pos = numeric.logsumexp(lqi[gain > 0] + np.log(gain[gain > 0]))
  neg = numeric.logsumexp(lqi[gain < 0] + np.log(-gain[gain < 0]))
  val = math.exp(pos) - math.exp(neg)
  return val + params.window.tail_mass, _ratio_value(tn, td)


def _ratio_value(num: int, den: int) -> float:
  return math.inf if den == 0 else num / den


def delta_report(params: ShuffleParams, epsilon: float,
                 slope_rule: str = 'exact') -> ShuffleResult:
  """delta(eps) of the amplified curve, with the threshold used.

  Args:
    params: Shuffle parameters.
    epsilon: eps >= 0.
    slope_rule: 'exact' uses the true slope -2w - (1 - 2w)/t of the
      amplified curve, giving t_eps = (1 - 2w) / (e^eps - 2w) and delta as
      a sum of positive terms. 'corollary' locates t_eps from the averaged
      slope l(t) over candidate breakpoints; it can land one knot early
      and slightly under-report delta.

  Returns:
    ShuffleResult with ``result`` = delta, clamped to [0, 1]. The
    truncated tail mass is added, so the value stays an upper bound.
  """
  if epsilon < 0:
    raise ValueError('epsilon must be non-negative')
  if slope_rule == 'exact':
    d, t_eps = _delta_exact(params, float(epsilon))
  elif slope_rule == 'corollary':
    d, t_eps = _delta_corollary(params, float(epsilon))
  else:
    raise ValueError(f'unknown slope_rule {slope_rule!r}')
  d = min(1.0, max(0.0, d))
  return ShuffleResult(params.n, params.eps0, 'eps', float(epsilon), d,
                       float(t_eps), params.truncation_tau,
                       params.window.tail_mass)


def shuffle_delta(params: ShuffleParams, epsilon: float,
                  slope_rule: str = 'exact') -> float:
  """delta such that the shuffled mechanism is (epsilon, delta)-DP."""
  return delta_report(params, epsilon, slope_rule).result


def epsilon_report(params: ShuffleParams, delta: float,
                   slope_rule: str = 'exact',
                   xtol: float = 1e-9) -> ShuffleResult:
  """Smallest eps with shuffle_delta(eps) <= delta, by bracketing.

  Returns eps = 0 when delta(0) <= delta already holds.

  Raises:
    ValueError: If delta is not in (0, 1).
    NonConvergence: If no finite bracket reaches delta (e.g. delta below
      the truncated tail mass).
  """
  if not 0 < delta < 1:
    raise ValueError('delta must lie in (0, 1)')
  fn = lambda e: shuffle_delta(params, e, slope_rule) - delta
  if fn(0.0) <= 0:
    eps = 0.0
  else:
    hi = params.eps0
    while fn(hi) > 0:
      hi *= 2
      if hi > EPS_BRACKET_MAX:
        # delta(eps) levels off at (1 - 2w) E[2^-C] plus the tail mass.
        raise NonConvergence(
            f'delta={delta:g} not reached; delta(eps) levels off at '
            f'{shuffle_delta(params, EPS_BRACKET_MAX, slope_rule):.3g}')
    eps = optimize.brentq(fn, 0.0, hi, xtol=xtol)
  t_eps = delta_report(params, eps, slope_rule).t_eps
  return ShuffleResult(params.n, params.eps0, 'delta', float(delta), eps,
                       t_eps, params.truncation_tau, params.window.tail_mass)


def shuffle_epsilon(params: ShuffleParams, delta: float,
                    slope_rule: str = 'exact') -> float:
  return epsilon_report(params, delta, slope_rule).result
