"""Log-space special functions shared by the accounting modules.

Probability masses in the shuffle accountant span hundreds of orders of
magnitude, so binomial masses are handled as natural logarithms
(``LogProb``) and only exponentiated at the last step.
"""

import math
from typing import Union

import numpy as np
from scipy import special

# Natural log of a probability mass. -inf encodes an exact zero.
LogProb = float

ArrayLike = Union[float, int, np.ndarray]


def _check_trials(m) -> None:
  if np.any(np.asarray(m) < 0):
    raise ValueError(f'number of trials must be non-negative, got {m}')


def binom_log_pmf(k: ArrayLike, m: ArrayLike, p: float) -> ArrayLike:
  """Log of the Binomial(m, p) probability mass at k.

  Exact limits at p in {0, 1} come from ``xlogy``/``xlog1py``, which
  treat 0 * log(0) as 0.

  Args:
    k: Number of successes. Values outside [0, m] give -inf.
    m: Number of trials.
    p: Success probability in [0, 1].

  Returns:
    log P[Binom(m, p) = k], a float or an array broadcast over k and m.

  Raises:
    ValueError: If m < 0 or p is outside [0, 1].
  """
  _check_trials(m)
  if not 0.0 <= p <= 1.0:
    raise ValueError(f'p must lie in [0, 1], got {p}')
  k = np.asarray(k, dtype=np.float64)
  m = np.asarray(m, dtype=np.float64)
  inside = (k >= 0) & (k <= m)
  kk = np.where(inside, k, 0.0)
  coef = special.gammaln(m + 1) - special.gammaln(kk + 1) - special.gammaln(
      m - kk + 1)
  with np.errstate(divide='ignore', invalid='ignore'):
    val = coef + special.xlogy(kk, p) + special.xlog1py(m - kk, -p)
  out = np.where(inside, val, -np.inf)
  return float(out) if out.ndim == 0 else out


def logsumexp(values) -> LogProb:
  """Compensated log-sum-exp of a 1-D collection.

  The shifted exponentials are accumulated with ``math.fsum`` so the only
  rounding comes from the final ``log1p``.

  Args:
    values: Iterable of log-masses. -inf entries are ignored.

  Returns:
    log(sum(exp(values))), or -inf for an empty or all -inf input.
  """
  v = np.asarray(values, dtype=np.float64).ravel()
  if v.size == 0:
    return -math.inf
  top = float(np.max(v))
  if top == -math.inf:
    return -math.inf
  if top == math.inf:
    return math.inf
  idx = int(np.argmax(v))
  rest = np.delete(v, idx)
  s = math.fsum(np.exp(rest - top).tolist())
  return top + math.log1p(s)


def logsumexp_rows(x: np.ndarray, axis: int = -1) -> np.ndarray:
  """Vectorized log-sum-exp along an axis (pairwise summation).

  Used on hot paths where ``logsumexp`` would be called thousands of
  times. Accuracy is a few ULP of the shifted sum.
  """
  x = np.asarray(x, dtype=np.float64)
  top = np.max(x, axis=axis, keepdims=True)
  safe = np.where(np.isfinite(top), top, 0.0)
  with np.errstate(divide='ignore'):
    out = np.log(np.sum(np.exp(x - safe), axis=axis, keepdims=True)) + safe
  out = np.where(np.isneginf(top), -np.inf, out)
  return np.squeeze(out, axis=axis)


def _log1mexp(x: np.ndarray) -> np.ndarray:
  # log(1 - exp(x)) for x <= 0, switching branch at -log 2.
  x = np.asarray(x, dtype=np.float64)
  with np.errstate(divide='ignore', invalid='ignore'):
    return np.where(x > -math.log(2.0), np.log(-np.expm1(x)),
                    np.log1p(-np.exp(x)))


def binom_log_cdf_table(m: int, p: float = 0.5) -> np.ndarray:
  """Log cdf of Binomial(m, p) at every k in 0..m.

  Each entry is summed directly from whichever tail is lighter, so both
  tails keep full relative accuracy. The heavy side is written as
  log(1 - upper tail).

  Args:
    m: Number of trials.
    p: Success probability.

  Returns:
    Array of length m + 1 with entry k equal to log P[Binom(m, p) <= k].
  """
  _check_trials(m)
  m = int(m)
  k = np.arange(m + 1)
  lp = binom_log_pmf(k, m, p)
  lp = np.atleast_1d(lp)
  lower = np.logaddexp.accumulate(lp)
  # upper[k] = log P[X > k]
  upper = np.empty(m + 1)
  upper[-1] = -np.inf
  if m > 0:
    upper[:-1] = np.logaddexp.accumulate(lp[::-1])[::-1][1:]
  use_lower = lower <= upper
  out = np.where(use_lower, lower, _log1mexp(upper))
  out[-1] = 0.0
  return out


def binom_log_sf_table(m: int, p: float = 0.5) -> np.ndarray:
  """Log survival function log P[Binom(m, p) > k] for k in 0..m."""
  _check_trials(m)
  m = int(m)
  lp = np.atleast_1d(binom_log_pmf(np.arange(m + 1), m, p))
  lower = np.logaddexp.accumulate(lp)
  upper = np.empty(m + 1)
  upper[-1] = -np.inf
  if m > 0:
    upper[:-1] = np.logaddexp.accumulate(lp[::-1])[::-1][1:]
  out = np.where(upper <= lower, upper, _log1mexp(lower))
  out[-1] = -np.inf
  return out


def binom_log_cdf(k: int, m: int, p: float) -> LogProb:
  """log P[Binom(m, p) <= k] with clamped semantics.

  k < 0 gives -inf and k >= m gives 0 exactly. Otherwise the lighter tail
  is summed directly (no continued fraction is needed at the sizes used
  here).

  Args:
    k: Any integer.
    m: Number of trials.
    p: Success probability.

  Returns:
    The log cdf as a float.
  """
  _check_trials(m)
  if not 0.0 <= p <= 1.0:
    raise ValueError(f'p must lie in [0, 1], got {p}')
  k = int(math.floor(k))
  if k < 0:
    return -math.inf
  if k >= m:
    return 0.0
  mean = m * p
  if k < mean:
    return logsumexp(binom_log_pmf(np.arange(k + 1), m, p))
  upper = logsumexp(binom_log_pmf(np.arange(k + 1, m + 1), m, p))
  return float(_log1mexp(upper))


def gaussian_cdf(x: ArrayLike) -> ArrayLike:
  """Standard normal cdf (erfc based, accurate in both tails)."""
  return special.ndtr(x)


def gaussian_log_cdf(x: ArrayLike) -> ArrayLike:
  return special.log_ndtr(x)


def gaussian_pdf(x: ArrayLike) -> ArrayLike:
  x = np.asarray(x, dtype=np.float64)
  return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def gaussian_quantile(q: ArrayLike) -> ArrayLike:
  """Inverse of ``gaussian_cdf`` on the open interval (0, 1).

  Raises:
    ValueError: If any q lies outside (0, 1).
  """
  arr = np.asarray(q, dtype=np.float64)
  if np.any(~((arr > 0.0) & (arr < 1.0))):
    raise ValueError(f'quantile level must lie in (0, 1), got {q}')
  return special.ndtri(q)
