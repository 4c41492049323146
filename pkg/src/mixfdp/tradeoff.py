"""Trade-off function algebra on exact piecewise-linear curves.

A trade-off curve T(P, Q) maps a type I error level alpha to the smallest
achievable type II error. For discrete pairs it is piecewise linear, and
everything downstream (conjugates, (eps, delta) conversion,
symmetrization, F-divergences) reduces to finite sums over its knots.

Continuous curves such as the Gaussian G_mu are exposed as handles that
evaluate in closed form and can be discretized either as a chordal upper
bound or a tangent lower bound. Privacy reports should only use the
tangent version.
"""

import dataclasses
import functools
import io
import math
import os
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import special

from mixfdp import numeric

DEDUP_ATOL = 1e-15
DEFAULT_TOL = 1e-12
SLOPE_RTOL = 1e-9

# Bound kinds recorded on discretized curves.
EXACT = 'exact'
LOWER = 'lower'
UPPER = 'upper'


class CurveError(ValueError):
  """Raised when knots do not describe a valid trade-off function."""


def _normalize(alpha, beta, tol):
  """Sorts, merges and trims knots. Returns clean float arrays."""
  a = np.asarray(alpha, dtype=np.float64).ravel()
  b = np.asarray(beta, dtype=np.float64).ravel()
  if a.shape != b.shape or a.size == 0:
    raise CurveError('alpha and beta must be non-empty and of equal length')
  if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
    raise CurveError('knots must be finite')
  if a.min() < -tol or a.max() > 1 + tol:
    raise CurveError('alpha must lie in [0, 1]')
  if b.min() < -tol or b.max() > 1 + tol:
    raise CurveError('beta must lie in [0, 1]')
  a = np.clip(a, 0.0, 1.0)
  b = np.clip(b, 0.0, 1.0)
  order = np.lexsort((b, a))
  a, b = a[order], b[order]
  # Merge runs of knots closer than DEDUP_ATOL, keeping the lowest beta.
  keep = np.ones(a.size, dtype=bool)
  keep[1:] = np.diff(a) > DEDUP_ATOL
  starts = np.flatnonzero(keep)
  a, b = a[starts], np.minimum.reduceat(b, starts)
  if a[0] > tol:
    raise CurveError(f'first knot must sit at alpha = 0, got {a[0]}')
  a[0] = 0.0
  if b[-1] > tol:
    raise CurveError(f'curve must reach beta = 0, last knot has {b[-1]}')
  b[-1] = 0.0
  first_zero = int(np.argmax(b <= 0.0))
  return a[:first_zero + 1].copy(), b[:first_zero + 1].copy()


def _check_knots(a, b, tol):
  if a.size > 1 and np.any(np.diff(a) <= 0):
    raise CurveError('alpha must be strictly increasing')
  if np.any(np.diff(b) > tol):
    raise CurveError('beta must be non-increasing')
  if np.any(b > 1.0 - a + tol):
    raise CurveError('curve must lie below the identity 1 - alpha')
  if a.size > 2:
    # Convexity: each interior knot lies on or below the chord of its
    # neighbours.
    span = a[2:] - a[:-2]
    lam = (a[1:-1] - a[:-2]) / span
    chord = b[:-2] + lam * (b[2:] - b[:-2])
    excess = b[1:-1] - chord
    if np.any(excess > tol):
      k = int(np.argmax(excess)) + 1
      raise CurveError(
          f'curve is not convex at knot {k} (excess {excess[k - 1]:.3e})')


@dataclasses.dataclass(frozen=True, eq=False)
class PiecewiseLinearTradeoff:
  """Convex, non-increasing trade-off curve stored as knots.

  Knots are normalized on construction: sorted by alpha, merged when
  closer than 1e-15 (lower beta wins), and trimmed after the first knot
  with beta = 0. Beyond the last knot the curve is 0.

  Attributes:
    alpha: Strictly increasing type I errors, starting at 0.
    beta: Matching type II errors, non-increasing and ending at 0.
    bound: Whether the knots are exact, or a lower or upper bound of some
      underlying continuous curve.
  """
  alpha: np.ndarray
  beta: np.ndarray
  bound: str = dataclasses.field(default=EXACT, compare=False)
  tol: float = dataclasses.field(default=DEFAULT_TOL, compare=False,
                                 repr=False)

  def __post_init__(self):
    a, b = _normalize(self.alpha, self.beta, self.tol)
    _check_knots(a, b, self.tol)
    a.setflags(write=False)
    b.setflags(write=False)
    object.__setattr__(self, 'alpha', a)
    object.__setattr__(self, 'beta', b)

  @classmethod
  def from_points(cls, alpha, beta, bound=EXACT, tol=DEFAULT_TOL):
    """Builds a curve from noisy points by taking their lower convex hull.

    Useful when knots come out of floating-point sums that may break
    convexity in the last few bits.
    """
    # Merge near-duplicates first: merging after the hull can break it.
    a, b = _normalize(alpha, beta, tol)
    ha, hb = lower_convex_hull(a, b)
    return cls(ha, hb, bound=bound, tol=tol)

  def __len__(self):
    return self.alpha.size

  @functools.cached_property
  def slopes(self) -> np.ndarray:
    """Per-segment slopes, non-decreasing (convexity)."""
    return np.diff(self.beta) / np.diff(self.alpha)

  @property
  def at_zero(self) -> float:
    return float(self.beta[0])

  @property
  def first_zero(self) -> float:
    """Smallest alpha with f(alpha) = 0."""
    return float(self.alpha[-1])

  def extended(self):
    """Knot arrays with (1, 0) appended when the curve hits 0 early."""
    if self.alpha[-1] < 1.0:
      return (np.append(self.alpha, 1.0), np.append(self.beta, 0.0))
    return self.alpha, self.beta

  def __call__(self, alpha):
    return self.evaluate(alpha)

  def evaluate(self, alpha):
    """Curve value by linear interpolation, 0 beyond the last knot.

    Raises:
      ValueError: If any alpha lies outside [0, 1].
    """
    x = np.asarray(alpha, dtype=np.float64)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
      raise ValueError('alpha must lie in [0, 1]')
    out = np.interp(x, self.alpha, self.beta, right=0.0)
    return float(out) if out.ndim == 0 else out

  def inverse(self) -> 'PiecewiseLinearTradeoff':
    """Left inverse f^{-1}(x) = inf{a : f(a) <= x}, by swapping coordinates."""
    return PiecewiseLinearTradeoff(self.beta[::-1], self.alpha[::-1],
                                   bound=self.bound, tol=self.tol)

  def is_symmetric(self, atol: float = 1e-12) -> bool:
    inv = self.inverse()
    grid = np.union1d(self.alpha, inv.alpha)
    return bool(np.max(np.abs(self(grid) - inv(grid))) <= atol)

  def errors_at_threshold(self, t):
    """Errors of the likelihood-ratio test that rejects when q/p >= t.

    With randomization c = 1 this lands on the knot that closes the last
    segment of slope <= -t.

    Args:
      t: Non-negative threshold or array of thresholds.

    Returns:
      Tuple (alpha(t), beta(t)) of arrays shaped like t.
    """
    a, b = self.extended()
    s = np.diff(b) / np.diff(a)
    t = np.asarray(t, dtype=np.float64)
    idx = np.searchsorted(s, -t, side='right')
    return a[idx], b[idx]

  def to_csv(self, path_or_buf=None, header_lines: Sequence[str] = ()):
    """Writes knots as ``alpha,beta`` rows with 17 significant digits.

    Args:
      path_or_buf: Destination path or text buffer. None returns a string.
      header_lines: Optional metadata written first as ``# `` comments.
    """
    buf = io.StringIO()
    for line in header_lines:
      buf.write(f'# {line}\n')
    buf.write('alpha,beta\n')
    for x, y in zip(self.alpha, self.beta):
      buf.write(f'{x:.17g},{y:.17g}\n')
    text = buf.getvalue()
    if path_or_buf is None:
      return text
    if isinstance(path_or_buf, (str, os.PathLike)):
      with open(path_or_buf, 'w', encoding='utf-8') as fh:
        fh.write(text)
    else:
      path_or_buf.write(text)
    return None

  @classmethod
  def from_csv(cls, path_or_buf) -> 'PiecewiseLinearTradeoff':
    if isinstance(path_or_buf, (str, os.PathLike)):
      with open(path_or_buf, encoding='utf-8') as fh:
        text = fh.read()
    else:
      text = path_or_buf.read()
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith('#')]
    if rows[0].strip() != 'alpha,beta':
      raise CurveError(f'unexpected CSV header {rows[0]!r}')
    data = np.array([[float(v) for v in r.split(',')] for r in rows[1:]])
    return cls(data[:, 0], data[:, 1])


def check_curve(f: PiecewiseLinearTradeoff, tol: float = DEFAULT_TOL) -> None:
  """Re-runs every knot invariant. Raises CurveError on the first failure."""
  a = np.asarray(f.alpha)
  b = np.asarray(f.beta)
  if a[0] != 0.0:
    raise CurveError('first knot is not at alpha = 0')
  if b[-1] != 0.0:
    raise CurveError('last knot does not have beta = 0')
  if a[-1] > 1.0:
    raise CurveError('last knot beyond alpha = 1')
  _check_knots(a, b, tol)


def lower_convex_hull(x, y):
  """Lower convex hull of points (monotone chain), sorted by x."""
  x = np.asarray(x, dtype=np.float64)
  y = np.asarray(y, dtype=np.float64)
  order = np.lexsort((y, x))
  x, y = x[order], y[order]
  hx, hy = [], []
  for px, py in zip(x.tolist(), y.tolist()):
    if hx and px == hx[-1]:
      continue  # same x, larger y
    while len(hx) >= 2:
      cross = ((hx[-1] - hx[-2]) * (py - hy[-2]) -
               (hy[-1] - hy[-2]) * (px - hx[-2]))
      if cross <= 0:
        hx.pop()
        hy.pop()
      else:
        break
    hx.append(px)
    hy.append(py)
  return np.array(hx), np.array(hy)


def identity() -> PiecewiseLinearTradeoff:
  """Id(alpha) = 1 - alpha: the two distributions are identical."""
  return PiecewiseLinearTradeoff([0.0, 1.0], [1.0, 0.0])


def zero_curve() -> PiecewiseLinearTradeoff:
  """The curve that is 0 for every alpha: disjoint supports."""
  return PiecewiseLinearTradeoff([0.0], [0.0])


def pure_dp_curve(eps0: float) -> PiecewiseLinearTradeoff:
  """max(0, 1 - e^eps0 alpha, e^-eps0 (1 - alpha))."""
  return approx_dp_curve(eps0, 0.0)


def approx_dp_curve(eps: float, delta: float) -> PiecewiseLinearTradeoff:
  """Trade-off curve of (eps, delta)-DP.

  max(0, 1 - delta - e^eps alpha, e^-eps (1 - delta - alpha)).
  """
  if eps < 0 or not 0 <= delta <= 1:
    raise ValueError('need eps >= 0 and delta in [0, 1]')
  k = (1.0 - delta) / (math.exp(eps) + 1.0)
  return PiecewiseLinearTradeoff([0.0, k, 1.0 - delta], [1.0 - delta, k, 0.0])


def mix_pointwise(curves: Sequence[PiecewiseLinearTradeoff],
                  weights: Sequence[float]) -> PiecewiseLinearTradeoff:
  """Pointwise convex combination sum_j w_j f_j(alpha), exact on knots."""
  weights = np.asarray(weights, dtype=np.float64)
  if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
    raise ValueError('weights must be non-negative and sum to 1')
  grid = functools.reduce(np.union1d, [c.extended()[0] for c in curves])
  vals = sum(w * c(grid) for w, c in zip(weights, curves))
  bound = EXACT
  kinds = {c.bound for c in curves} - {EXACT}
  if len(kinds) == 1:
    bound = kinds.pop()
  return PiecewiseLinearTradeoff.from_points(grid, vals, bound=bound)


def tangent_envelope(alpha, beta, slope, err=None) -> PiecewiseLinearTradeoff:
  """Conservative lower curve from points and their supporting slopes.

  Each point (alpha_k, beta_k) is assumed to lie within err_k of a convex
  trade-off curve whose subgradient there is slope_k. The line through
  the point is lowered by err_k (1 + |slope_k|), which keeps it below the
  true tangent whatever the error direction. The maximum of these lines
  and the zero line is returned.
  """
  a = np.asarray(alpha, dtype=np.float64)
  b = np.asarray(beta, dtype=np.float64)
  s = np.asarray(slope, dtype=np.float64)
  e = np.zeros_like(a) if err is None else np.broadcast_to(
      np.asarray(err, dtype=np.float64), a.shape)
  ok = np.isfinite(s)
  a, b, s, e = a[ok], b[ok], s[ok], e[ok]
  icpt = b - e * (1.0 + np.abs(s)) - s * a
  s = np.append(s, 0.0)
  icpt = np.append(icpt, 0.0)
  order = np.lexsort((icpt, s))
  s, icpt = s[order], icpt[order]
  # Among equal slopes keep the highest intercept (the last after sort).
  last = np.ones(s.size, dtype=bool)
  last[:-1] = s[1:] != s[:-1]
  s, icpt = s[last], icpt[last]
  hs, hb = [], []
  for sk, bk in zip(s.tolist(), icpt.tolist()):
    while len(hs) >= 2:
      # Drop the top line if the new one overtakes hs[-2] before it does.
      x_new = (hb[-2] - bk) / (sk - hs[-2])
      x_top = (hb[-2] - hb[-1]) / (hs[-1] - hs[-2])
      if x_new <= x_top:
        hs.pop()
        hb.pop()
      else:
        break
    hs.append(sk)
    hb.append(bk)
  hs = np.array(hs)
  hb = np.array(hb)
  cross = (hb[:-1] - hb[1:]) / (hs[1:] - hs[:-1])
  xs = np.concatenate([[0.0], cross[(cross > 0) & (cross < 1)], [1.0]])
  ys = np.max(hb[None, :] + hs[None, :] * xs[:, None], axis=1)
  ys = np.clip(ys, 0.0, None)
  ys = np.minimum(ys, 1.0 - xs)
  return PiecewiseLinearTradeoff.from_points(xs, ys, bound=LOWER)


@dataclasses.dataclass(frozen=True)
class GaussianTradeoff:
  """G_mu(x) = Phi(Phi^{-1}(1 - x) - mu), the curve of N(0,1) vs N(mu,1)."""
  mu: float

  def __post_init__(self):
    if not self.mu >= 0:
      raise ValueError(f'mu must be non-negative, got {self.mu}')

  def __call__(self, alpha):
    return self.evaluate(alpha)

  def evaluate(self, alpha):
    x = np.asarray(alpha, dtype=np.float64)
    if np.any((x < 0) | (x > 1)):
      raise ValueError('alpha must lie in [0, 1]')
    # Phi^{-1}(1 - x) written as -Phi^{-1}(x) keeps accuracy for small x.
    with np.errstate(divide='ignore'):
      z = -_ndtri_closed(x)
    out = numeric.gaussian_cdf(z - self.mu)
    return float(out) if np.ndim(out) == 0 else out

  def derivative(self, alpha):
    """f'(alpha) = -exp(mu z - mu^2 / 2) with z = Phi^{-1}(1 - alpha)."""
    x = np.asarray(alpha, dtype=np.float64)
    z = -_ndtri_closed(x)
    with np.errstate(over='ignore'):
      out = -np.exp(self.mu * z - 0.5 * self.mu**2)
    return float(out) if np.ndim(out) == 0 else out

  def errors_at_threshold(self, t):
    """Errors of the test rejecting when q/p >= t (c = 1 at ties)."""
    t = np.asarray(t, dtype=np.float64)
    if self.mu == 0:
      rej = t <= 1.0
      return np.where(rej, 1.0, 0.0), np.where(rej, 0.0, 1.0)
    with np.errstate(divide='ignore'):
      z = (np.log(t) + 0.5 * self.mu**2) / self.mu
    return numeric.gaussian_cdf(-z), numeric.gaussian_cdf(z - self.mu)

  def sample_alphas(self, points: int = 513) -> np.ndarray:
    """Alpha grid evenly spaced in the Gaussian quantile of the test.

    Inner alphas stay above 1e-14 for mu < 13, so knot merging near
    alpha = 0 (where the slope is huge) cannot move beta. The range is
    centred on mu / 2, which makes the grid mirror-symmetric.
    """
    zmax = max(7.6, self.mu / 2 + 1.0)
    z = np.linspace(self.mu - zmax, zmax, points)
    return np.unique(np.concatenate([[0.0], numeric.gaussian_cdf(-z), [1.0]]))

  def to_knots(self, grid: Union[int, Sequence[float]] = 513,
               mode: str = 'tangent') -> PiecewiseLinearTradeoff:
    """Discretizes the curve.

    Args:
      grid: Number of points, or explicit alpha values.
      mode: 'chord' joins points on the curve (an upper bound).
        'tangent' takes the envelope of tangent lines (a lower bound, the
        safe choice for privacy claims).

    Returns:
      A PiecewiseLinearTradeoff tagged with its bound kind.
    """
    if isinstance(grid, (int, np.integer)):
      xs = self.sample_alphas(int(grid))
    else:
      xs = np.unique(np.clip(np.asarray(grid, dtype=np.float64), 0, 1))
    if mode == 'chord':
      xs = np.union1d(xs, [0.0, 1.0])
      return PiecewiseLinearTradeoff.from_points(xs, self(xs), bound=UPPER)
    if mode == 'tangent':
      inner = xs[(xs > 0) & (xs < 1)]
      return tangent_envelope(inner, self(inner), self.derivative(inner))
    raise ValueError(f'unknown mode {mode!r}')


def _ndtri_closed(x):
  # ndtri on [0, 1] with the natural infinite limits at the endpoints.
  return special.ndtri(x)


def gdp_curve(mu: float) -> GaussianTradeoff:
  """Exact handle for G_mu. mu = 0 gives the identity."""
  return GaussianTradeoff(float(mu))


@dataclasses.dataclass(frozen=True, eq=False)
class ConvexConjugate:
  """Exact conjugate f*(y) = max_x {x y - f(x)} of a curve on [0, 1].

  Evaluating uses the supremum over knots directly. The vertex table
  (slopes of f as abscissae) gives a second, independent route used by
  ``biconjugate``.
  """
  knots_alpha: np.ndarray
  knots_beta: np.ndarray

  def __call__(self, y):
    y = np.asarray(y, dtype=np.float64)
    vals = np.max(self.knots_alpha[None, :] * y.reshape(-1, 1) -
                  self.knots_beta[None, :], axis=1)
    return float(vals[0]) if y.ndim == 0 else vals.reshape(y.shape)

  @functools.cached_property
  def vertices(self):
    """(y_k, f*(y_k)) at the segment slopes of f, ascending in y."""
    a, b = self.knots_alpha, self.knots_beta
    ys = np.diff(b) / np.diff(a)
    vals = a[:-1] * ys - b[:-1]
    # Collinear knots repeat a slope; keep one vertex per distinct slope.
    keep = np.ones(ys.size, dtype=bool)
    keep[1:] = np.diff(ys) > 0
    return ys[keep], vals[keep]

  def biconjugate(self) -> PiecewiseLinearTradeoff:
    """f** rebuilt only from the vertex table of f*.

    Between consecutive vertices f* is affine with slope equal to a knot
    alpha of f, and f**(alpha) = alpha y - f*(y) at either vertex.
    """
    ys, vals = self.vertices
    if ys.size == 0:
      return PiecewiseLinearTradeoff([0.0], [0.0])
    # Left of the first vertex f* has slope alpha_0 = 0.
    inner = np.diff(vals) / np.diff(ys)
    alphas = np.concatenate([[0.0], inner, [self.knots_alpha[-1]]])
    y_at = np.concatenate([[ys[0]], ys[1:], [ys[-1]]])
    v_at = np.concatenate([[vals[0]], vals[1:], [vals[-1]]])
    betas = alphas * y_at - v_at
    return PiecewiseLinearTradeoff.from_points(alphas, betas)


def conjugate(f: PiecewiseLinearTradeoff) -> ConvexConjugate:
  """Convex conjugate of f on its domain [0, 1] (knot (1, 0) included)."""
  a, b = f.extended()
  return ConvexConjugate(np.asarray(a), np.asarray(b))


def _xbar(f: PiecewiseLinearTradeoff) -> int:
  """Knot index of inf{x : -1 in subdifferential of f at x}.

  A segment whose slope rounds to just below -1 still counts as the
  slope -1 chord; symmetric curves hit this all the time.
  """
  a, b = f.extended()
  s = np.diff(b) / np.diff(a)
  return int(np.searchsorted(s, -1.0 - SLOPE_RTOL, side='left'))


def symmetrize(f: PiecewiseLinearTradeoff,
               tol: float = 1e-12) -> PiecewiseLinearTradeoff:
  """C(f) = min{f, f^{-1}}** via the three-branch formula.

  Keeps f up to xbar = inf{x : -1 in df(x)}, joins (xbar, f(xbar)) to its
  mirror image with a slope -1 chord, then follows f^{-1}. Curves with
  f(0) < 1 are accepted, since the formula only needs xbar <= f(xbar).

  Raises:
    CurveError: If xbar > f(xbar). The symmetrization is then the other
      branch max{f, f^{-1}}, which is not implemented.
  """
  a, b = f.extended()
  k = _xbar(f)
  xb, fx = float(a[k]), float(b[k])
  if xb > fx + tol:
    raise CurveError(
        f'symmetrization needs xbar <= f(xbar); got xbar={xb:.6g}, '
        f'f(xbar)={fx:.6g} (max-branch curve)')
  left_a, left_b = a[:k + 1], b[:k + 1]
  mir_a, mir_b = left_b[::-1], left_a[::-1]
  if abs(xb - fx) <= tol:
    mir_a, mir_b = mir_a[1:], mir_b[1:]
  out_a = np.concatenate([left_a, mir_a])
  out_b = np.concatenate([left_b, mir_b])
  return PiecewiseLinearTradeoff.from_points(out_a, out_b, bound=f.bound)


def _directions(f, both):
  return (f, f.inverse()) if both else (f,)


def to_epsilon_delta(f: PiecewiseLinearTradeoff, epsilon,
                     symmetrize_first: bool = True):
  """delta(eps) = 1 + f*(-e^eps), clamped to [0, 1].

  Args:
    f: The trade-off curve.
    epsilon: Scalar or array of eps >= 0.
    symmetrize_first: Convert C(f) rather than f. Since the conjugate of
      min{f, f^{-1}}** is max(f*, (f^{-1})*), this takes the worse of the
      two directions and works for either symmetrization branch.

  Returns:
    delta, shaped like epsilon.
  """
  eps = np.asarray(epsilon, dtype=np.float64)
  if np.any(eps < 0):
    raise ValueError('epsilon must be non-negative')
  y = -np.exp(eps)
  d = 1.0 + np.max([conjugate(g)(y) for g in _directions(f, symmetrize_first)],
                   axis=0)
  d = np.clip(d, 0.0, 1.0)
  return float(d) if np.ndim(d) == 0 else d


def invert_epsilon(f: PiecewiseLinearTradeoff, delta: float,
                   symmetrize_first: bool = True) -> float:
  """Smallest eps >= 0 with to_epsilon_delta(f, eps) <= delta.

  delta(eps) is a maximum of terms 1 - beta_k - e^eps alpha_k, so the
  answer is the largest per-knot root, computed directly.

  Returns:
    eps, or 0.0 when delta(0) <= delta already holds.

  Raises:
    ValueError: If delta is not in (0, 1), or delta < 1 - f(0), which no
      finite eps can reach.
  """
  if not 0 < delta < 1:
    raise ValueError('delta must lie in (0, 1)')
  knots = [g.extended() for g in _directions(f, symmetrize_first)]
  a = np.concatenate([k[0] for k in knots])
  b = np.concatenate([k[1] for k in knots])
  gap = 1.0 - b - delta
  # Rounding of 1 - f(0) must not turn delta = 1 - f(0) into a refusal.
  if np.any((a == 0) & (gap > DEDUP_ATOL)):
    raise ValueError(f'delta={delta} is below 1 - f(0); no finite eps works')
  pos = (a > 0) & (gap > 0)
  if not np.any(pos):
    return 0.0
  return max(0.0, float(np.max(np.log(gap[pos] / a[pos]))))


@dataclasses.dataclass(frozen=True)
class FDivergence:
  """Convex F on (0, inf) with its boundary behaviour.

  Attributes:
    fn: Vectorized F.
    at_zero: F(0+).
    slope_at_infinity: lim F(s)/s as s grows (may be inf).
    name: Label for reports.
  """
  fn: Callable[[np.ndarray], np.ndarray]
  at_zero: float
  slope_at_infinity: float
  name: str = 'F'


def hockey_stick(gamma: float) -> FDivergence:
  if gamma < 0:
    raise ValueError('gamma must be non-negative')
  return FDivergence(lambda s: np.maximum(s - gamma, 0.0), 0.0, 1.0,
                     f'hockey_stick({gamma:g})')


def power_divergence(order: float) -> FDivergence:
  """F(s) = s^order. Its divergence equals exp((order-1) R_order)."""
  if order < 1:
    raise ValueError('order must be >= 1')
  tail = 1.0 if order == 1 else math.inf
  return FDivergence(lambda s: np.power(s, order), 0.0, tail,
                     f'power({order:g})')


def f_divergence(f: PiecewiseLinearTradeoff, F: FDivergence) -> float:
  """D_F(P || Q) = E_Q[F(p/q)] read off the knots of f = T(P, Q).

  A segment of slope s carries P-mass d alpha and Q-mass |s| d alpha. The
  jump 1 - f(0) at alpha = 0 is Q-mass with p = 0, and 1 - z_f (z_f the
  first zero) is P-mass with q = 0.

  Returns:
    The divergence. inf when F grows superlinearly and z_f < 1.
  """
  s = np.abs(f.slopes)
  da = np.diff(f.alpha)
  total = 0.0
  if s.size:
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
      terms = F.fn(1.0 / s) * s * da
    total = math.fsum(terms.tolist())
  if f.at_zero < 1.0:
    total += F.at_zero * (1.0 - f.at_zero)
  gap = 1.0 - f.first_zero
  # Knots crowd near alpha = 1 in floating point; ignore round-off gaps.
  if gap > 1e-12:
    if math.isinf(F.slope_at_infinity):
      return math.inf
    total += F.slope_at_infinity * gap
  return total


@dataclasses.dataclass(frozen=True, eq=False)
class ParametricCurve:
  """Threshold-indexed samples (t, alpha, beta) with error bounds.

  Attributes:
    t: Thresholds in sample order.
    alpha: Type I errors, non-decreasing along the samples.
    beta: Type II errors, non-increasing along the samples.
    err: Absolute error bound per sample (on both coordinates).
    slope: Supporting slope of the underlying curve at each sample.
  """
  t: np.ndarray
  alpha: np.ndarray
  beta: np.ndarray
  err: np.ndarray
  slope: np.ndarray

  def __post_init__(self):
    n = np.asarray(self.t).size
    for name in ('t', 'alpha', 'beta', 'err', 'slope'):
      arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=np.float64),
                            (n,)).copy()
      arr.setflags(write=False)
      object.__setattr__(self, name, arr)

  def __len__(self):
    return self.t.size

  def check(self, slack: float = 0.0) -> None:
    """Monotonicity, f <= Id and convexity checks with error slack."""
    # Weighted sums of exact samples still round in the last bits.
    tol = 2 * self.err.max(initial=0.0) + slack + 1e-15
    order = np.argsort(self.alpha, kind='stable')
    if np.any(np.diff(self.alpha) < -tol):
      raise CurveError('alpha decreases along the samples')
    if np.any(np.diff(self.beta) > tol):
      raise CurveError('beta increases along the samples')
    if np.any(self.beta > 1 - self.alpha + tol):
      raise CurveError('samples above the identity')
    a, b = self.alpha[order], self.beta[order]
    keep = np.ones(a.size, dtype=bool)
    keep[1:] = np.diff(a) > 1e-12
    a, b = a[keep], b[keep]
    if a.size > 2:
      lam = (a[1:-1] - a[:-2]) / (a[2:] - a[:-2])
      excess = b[1:-1] - (b[:-2] + lam * (b[2:] - b[:-2]))
      if np.any(excess > 2 * tol):
        raise CurveError('samples are not convex within tolerance')

  def to_tradeoff(self, mode: str = 'tangent') -> PiecewiseLinearTradeoff:
    """Lower ('tangent') or upper ('chord') piecewise-linear curve."""
    if mode == 'tangent':
      return tangent_envelope(self.alpha, self.beta, self.slope, self.err)
    if mode == 'chord':
      xs = np.concatenate([[0.0], self.alpha, [1.0]])
      ys = np.concatenate([[1.0], self.beta, [0.0]])
      inside = (xs >= 0) & (xs <= 1)
      return PiecewiseLinearTradeoff.from_points(
          xs[inside], np.clip(ys[inside], 0, 1), bound=UPPER)
    raise ValueError(f'unknown mode {mode!r}')


Curve = Union[PiecewiseLinearTradeoff, GaussianTradeoff]


def as_threshold_map(curve: Curve) -> Callable:
  return curve.errors_at_threshold


def evaluate(f: Curve, alpha) -> Optional[float]:
  """Functional form of ``f(alpha)`` for any curve type."""
  return f(alpha)
