"""One-step DP-GD with a Gaussian random initialization.

With theta0 = I ~ N(0, 1) the output is a continuous mixture over I of
N(s_I(D), sigma^2). Revealing I turns each slice into the pair
N(0, 1) vs N(mu_I, 1), and averaging the slices' likelihood-ratio tests
at a shared threshold gives a lower bound on the trade-off curve:

  alpha(t) = E_I[Phi(t / |mu_I| - |mu_I| / 2)],
  beta(t)  = E_I[Phi(-t / |mu_I| - |mu_I| / 2)],

where t thresholds log(p/q) = -mu_I x + mu_I^2 / 2 (reject when <= t).
The two sign branches of the indicator form collapse into |mu_I|. At
mu_I = 0 the slice is uninformative and contributes (1{t >= 0}, 1{t < 0}).
"""

import dataclasses
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from mixfdp import _pool
from mixfdp import numeric
from mixfdp import tradeoff
from mixfdp.shuffle import NonConvergence

KINDS = ('clip', 'noclip', 'logistic', 'custom')
T_CHUNK = 8


@dataclasses.dataclass(frozen=True)
class InitSensitivityModel:
  """Per-initialization sensitivity mu_I of the one-step gradient.

  Attributes:
    kind: 'clip' (clipped least squares), 'noclip' (plain least squares),
      'logistic' (bounded |xy| <= M) or 'custom'.
    a: Data constant of the linear example, y_i = a x_i.
    c: Clipping norm ('clip' only). c = 0 gives mu_I = 0.
    sigma: Gradient noise scale. mu_I is divided by it.
    M: Bound on |xy| ('logistic' only).
    mu_fn: Vectorized I -> mu_I ('custom' only).
    kinks: Points where mu_I is not smooth ('custom' only).
  """
  kind: str = 'clip'
  a: float = 1.0
  c: Optional[float] = None
  sigma: float = 1.0
  M: Optional[float] = None
  mu_fn: Optional[Callable] = dataclasses.field(default=None, compare=False)
  kinks: Tuple[float, ...] = ()

  def __post_init__(self):
    if self.kind not in KINDS:
      raise ValueError(f'kind must be one of {KINDS}, got {self.kind!r}')
    if not self.sigma > 0:
      raise ValueError(f'sigma must be positive, got {self.sigma}')
    if self.kind == 'clip' and (self.c is None or not self.c >= 0):
      raise ValueError('clip model needs c >= 0')
    if self.kind == 'logistic' and (self.M is None or not self.M > 0):
      raise ValueError('logistic model needs M > 0')
    if self.kind == 'custom' and self.mu_fn is None:
      raise ValueError('custom model needs mu_fn')
    object.__setattr__(self, 'kinks', tuple(float(k) for k in self.kinks))

  def mu(self, i):
    """mu_I, vectorized over I."""
    i = np.asarray(i, dtype=np.float64)
    if self.kind == 'noclip':
      out = self.a - i
    elif self.kind == 'clip':
      out = np.clip(self.a - i, -self.c, self.c)
    elif self.kind == 'logistic':
      # sup over |u| <= M of e^{-Iu} / (1 + e^{-Iu}) sits at u = -M sign(I).
      out = 1.0 / (1.0 + np.exp(-np.abs(i) * self.M))
    else:
      out = np.asarray(self.mu_fn(i), dtype=np.float64)
    return out / self.sigma

  def kink_points(self) -> Tuple[float, ...]:
    if self.kind == 'clip':
      return (self.a - self.c, self.a + self.c)
    if self.kind == 'logistic':
      return (0.0,)
    if self.kind == 'custom':
      return self.kinks
    return ()

  @property
  def bounded(self) -> bool:
    return self.kind != 'noclip'


@dataclasses.dataclass(frozen=True)
class QuadratureSpec:
  """Integration settings for the expectations over I ~ N(0, 1).

  Attributes:
    domain: Integration interval. Gaussian mass outside is added to the
      error bound.
    tolerance: Absolute error target per expectation.
    max_subdivisions: Interval budget per panel.
  """
  domain: Tuple[float, float] = (-8.5, 8.5)
  tolerance: float = 1e-9
  max_subdivisions: int = 2000

  def __post_init__(self):
    lo, hi = self.domain
    if not lo < hi:
      raise ValueError('domain must be an increasing interval')
    if not self.tolerance > 0:
      raise ValueError('tolerance must be positive')
    if self.outside_mass > self.tolerance / 10:
      raise ValueError('domain leaves more than tolerance / 10 of the mass')

  @property
  def outside_mass(self) -> float:
    lo, hi = self.domain
    return float(numeric.gaussian_cdf(lo) + numeric.gaussian_cdf(-hi))

  def panels(self, kinks: Sequence[float]) -> np.ndarray:
    lo, hi = self.domain
    inner = [k for k in kinks if lo < k < hi]
    return np.unique(np.concatenate([[lo, hi], inner]))


def default_t_grid(points: int = 201, t_max: float = 25.0,
                   squeeze: float = 3.0) -> np.ndarray:
  """Symmetric tanh-spaced thresholds, denser near t = 0."""
  u = np.linspace(-1.0, 1.0, points)
  t = t_max * np.tanh(squeeze * u) / math.tanh(squeeze)
  if points % 2:
    t[points // 2] = 0.0
  return t


def mu_bound(model: InitSensitivityModel, quad: 'QuadratureSpec') -> float:
  """sup |mu_I| over the integration domain (inf for the no-clip model)."""
  if model.kind == 'noclip':
    return math.inf
  if model.kind == 'clip':
    return model.c / model.sigma
  if model.kind == 'logistic':
    return float(np.max(np.abs(model.mu(np.array(quad.domain)))))
  grid = np.union1d(np.linspace(*quad.domain, 20001), model.kink_points())
  return float(np.max(np.abs(model.mu(grid))))


def model_t_grid(model: InitSensitivityModel, quad: 'QuadratureSpec',
                 points: int = 201) -> np.ndarray:
  """Default grid, narrowed to the thresholds where the errors move.

  For |t| > m (m / 2 + 9), with m the sup of |mu_I|, every slice has
  alpha or beta below Phi(-9) ~ 1e-19, so wider thresholds only repeat
  the end points.
  """
  m = mu_bound(model, quad)
  t_max = 25.0 if not math.isfinite(m) else min(25.0, m * (m / 2 + 9.0))
  if t_max == 0:
    return np.array([-1.0, 0.0, 1.0])
  return default_t_grid(points, t_max)


def slice_errors(mu, t) -> Tuple[np.ndarray, np.ndarray]:
  """(alpha, beta) of the slice N(0,1) vs N(mu,1), broadcast over mu and t."""
  m = np.abs(np.asarray(mu, dtype=np.float64))
  t = np.asarray(t, dtype=np.float64)
  m, t = np.broadcast_arrays(m, t)
  zero = m == 0
  safe = np.where(zero, 1.0, m)
  # Subnormal mu sends t / mu to +-inf, where Phi is exact.
  with np.errstate(over='ignore'):
    alpha = numeric.gaussian_cdf(t / safe - safe / 2)
    beta = numeric.gaussian_cdf(-t / safe - safe / 2)
  alpha = np.where(zero, (t >= 0).astype(np.float64), alpha)
  beta = np.where(zero, (t < 0).astype(np.float64), beta)
  return alpha, beta


def _integrate_chunk(model, quad, t):
  def integrand(i):
    a, b = slice_errors(model.mu(i), t)
    return np.concatenate([a, b]) * numeric.gaussian_pdf(i)

  edges = quad.panels(model.kink_points())
  total = np.zeros(2 * t.size)
  err = 0.0
  tol = quad.tolerance / (edges.size - 1)
  for lo, hi in zip(edges[:-1], edges[1:]):
    val, e, info = integrate.quad_vec(integrand, lo, hi, epsabs=tol,
                                      epsrel=0.0, norm='max',
                                      limit=quad.max_subdivisions,
                                      full_output=True)
    if not info.success or e > tol:
      raise NonConvergence(
          f'quadrature on [{lo:g}, {hi:g}] stopped at error {e:.3g} '
          f'(target {tol:.3g}) after {info.intervals.shape[0]} intervals')
    total += val
    err += e
  return total[:t.size], total[t.size:], err


def dpgd_curve(model: InitSensitivityModel,
               quad: QuadratureSpec = QuadratureSpec(),
               t_grid=None,
               threads: Optional[int] = None) -> tradeoff.ParametricCurve:
  """Threshold samples of the initialization-averaged trade-off bound.

  Args:
    model: Sensitivity model.
    quad: Quadrature settings.
    t_grid: Ascending thresholds on log(p/q); defaults to
      ``model_t_grid(model, quad)``.
    threads: Worker threads. Chunks of thresholds are fixed, so results
      do not depend on this.

  Returns:
    ParametricCurve with slope -e^{-t} at each sample. Its ``err`` holds
    the quadrature bound plus the Gaussian mass outside the domain. Use
    ``to_tradeoff('tangent')`` for a certified lower curve.

  Raises:
    NonConvergence: If a panel exhausts ``max_subdivisions``.
  """
  t = model_t_grid(model, quad) if t_grid is None else np.asarray(t_grid, float)
  if t.ndim != 1 or np.any(np.diff(t) < 0):
    raise ValueError('t_grid must be a sorted 1-D sequence')
  chunks = [t[k:k + T_CHUNK] for k in range(0, t.size, T_CHUNK)]
  parts = _pool.ordered_map(lambda c: _integrate_chunk(model, quad, c),
                            chunks, threads)
  alpha = np.concatenate([p[0] for p in parts])
  beta = np.concatenate([p[1] for p in parts])
  err = np.concatenate([np.full(c.size, p[2]) for c, p in zip(chunks, parts)])
  err = err + quad.outside_mass
  with np.errstate(over='ignore'):
    slope = -np.exp(-t)
  return tradeoff.ParametricCurve(t, np.clip(alpha, 0, 1),
                                  np.clip(beta, 0, 1), err, slope)


def gdp_baseline(c: float, sigma: float = 1.0) -> tradeoff.GaussianTradeoff:
  """G_{c / sigma}: the guarantee that ignores the initialization."""
  if not c > 0:
    raise ValueError(f'c must be positive, got {c}')
  return tradeoff.gdp_curve(c / sigma)


@dataclasses.dataclass(frozen=True)
class AmplificationReport:
  """Per-alpha comparison of the initialization bound with G_c.

  Attributes:
    alpha: Type I error levels.
    f_init: Certified lower curve from the tangent envelope.
    g_c: Baseline G_{c/sigma}(alpha).
    margin: f_init - g_c. Positive entries are certified.
    error_bound: Largest per-sample error of the underlying samples.
  """
  alpha: np.ndarray
  f_init: np.ndarray
  g_c: np.ndarray
  margin: np.ndarray
  error_bound: float

  def rows(self):
    return list(zip(self.alpha.tolist(), self.f_init.tolist(),
                    self.g_c.tolist(), self.margin.tolist()))


def amplification_report(model: InitSensitivityModel,
                         quad: QuadratureSpec = QuadratureSpec(),
                         alpha_grid=None, t_grid=None,
                         threads: Optional[int] = None
                         ) -> AmplificationReport:
  """Margin of the initialization bound over c-GDP on an alpha grid."""
  if model.kind != 'clip':
    raise ValueError('amplification_report needs the clip model')
  alpha = (np.linspace(0.1, 0.9, 9) if alpha_grid is None
           else np.asarray(alpha_grid, dtype=np.float64))
  samples = dpgd_curve(model, quad, t_grid, threads)
  f_init = samples.to_tradeoff('tangent')(alpha)
  g = gdp_baseline(model.c, model.sigma)(alpha)
  return AmplificationReport(alpha, f_init, g, f_init - g,
                             float(samples.err.max()))


@dataclasses.dataclass(frozen=True)
class MonteCarloEstimate:
  alpha: float
  beta: float
  alpha_se: float
  beta_se: float


def monte_carlo_errors(model: InitSensitivityModel, t: float, draws: int,
                       seed: int, batch: int = 1_000_000
                       ) -> MonteCarloEstimate:
  """Sample-mean estimate of (alpha(t), beta(t)) over I ~ N(0, 1).

  Uses the sign-split form with t_I = -t / mu_I + mu_I / 2: the mu <= 0
  branch contributes (Phi(t_I), Phi(-t_I + mu_I)) and the mu > 0 branch
  (Phi(-t_I), Phi(t_I - mu_I)).
  """
  rng = np.random.default_rng(seed)
  sums = np.zeros(4)
  done = 0
  while done < draws:
    k = min(batch, draws - done)
    mu = model.mu(rng.standard_normal(k))
    with np.errstate(divide='ignore', invalid='ignore'):
      ti = -t / mu + mu / 2
    neg = mu <= 0
    a = np.where(neg, numeric.gaussian_cdf(ti), numeric.gaussian_cdf(-ti))
    b = np.where(neg, numeric.gaussian_cdf(-ti + mu),
                 numeric.gaussian_cdf(ti - mu))
    zero = mu == 0
    a = np.where(zero, float(t >= 0), a)
    b = np.where(zero, float(t < 0), b)
    sums += [a.sum(), b.sum(), (a * a).sum(), (b * b).sum()]
    done += k
  ma, mb = sums[0] / draws, sums[1] / draws
  va = max(sums[2] / draws - ma * ma, 0.0)
  vb = max(sums[3] / draws - mb * mb, 0.0)
  return MonteCarloEstimate(ma, mb, math.sqrt(va / draws),
                            math.sqrt(vb / draws))


def gaussian_pair_curve(mean: float, var: float,
                        points: int = 2001) -> tradeoff.ParametricCurve:
  """Exact samples of T(N(0, 1), N(mean, var)) for var >= 1.

  log(q/p)(x) = k x^2 + m x + c0 with k = (1 - 1/var)/2 >= 0. The test
  rejecting when log(q/p) >= s has acceptance region between the roots,
  so both errors are differences of normal cdfs. For var = 1 this is
  G_{|mean|}.
  """
  if not var >= 1:
    raise ValueError('var must be >= 1')
  sd = math.sqrt(var)
  k = 0.5 * (1.0 - 1.0 / var)
  m = mean / var
  c0 = -0.5 * mean**2 / var - 0.5 * math.log(var)
  if k == 0:
    if mean == 0:
      raise ValueError('identical distributions')
    x = np.linspace(-12.0, 12.0 + abs(mean), points)
    s = m * x + c0
    if mean > 0:
      alpha, beta = numeric.gaussian_cdf(-x), numeric.gaussian_cdf(x - mean)
    else:
      alpha, beta = numeric.gaussian_cdf(x), numeric.gaussian_cdf(mean - x)
    order = np.argsort(alpha)
    return tradeoff.ParametricCurve(s[order], alpha[order], beta[order], 0.0,
                                    -np.exp(s[order]))
  vertex = -m / (2 * k)
  s_min = c0 - m * m / (4 * k)
  # Radius of the acceptance interval around the vertex.
  r = np.concatenate([[0.0], np.geomspace(1e-6, 40.0, points - 1)])
  s = s_min + k * r * r
  lo, hi = vertex - r, vertex + r
  alpha = numeric.gaussian_cdf(lo) + numeric.gaussian_cdf(-hi)
  beta = (numeric.gaussian_cdf((hi - mean) / sd) -
          numeric.gaussian_cdf((lo - mean) / sd))
  rev = slice(None, None, -1)
  return tradeoff.ParametricCurve(s[rev], alpha[rev], beta[rev], 0.0,
                                  -np.exp(s[rev]))
