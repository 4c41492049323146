"""Lower bounds on trade-off curves of mixtures.

Two combinators are provided.

Joint concavity: revealing which component produced a sample can only
help the tester, so T(P_w, Q_w) is bounded below by the curve of the
revealed pair. Its points come from running each component's
likelihood-ratio test at a shared threshold t (reject when q/p >= t) and
averaging the errors with the mixture weights.

Advanced joint concavity (two components): a sharper bound assembled
from convex conjugates of rescaled cross curves T(P_i, Q_j), with two
free parameters (gamma, eta).

The module also checks the ratio condition that characterizes equality
in the joint-concavity bound, and the hockey-stick and power-divergence
joint-convexity inequalities on explicit discrete pairs.
"""

import dataclasses
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from mixfdp import oracle
from mixfdp import tradeoff
from mixfdp.tradeoff import PiecewiseLinearTradeoff

WEIGHT_TOL = 1e-9


@dataclasses.dataclass(frozen=True)
class ComponentCurve:
  """One mixture component: its curve T(P_i, Q_i) and weight.

  Attributes:
    curve: A PiecewiseLinearTradeoff or an exact handle such as G_mu.
    weight: Mixture weight w_i.
    threshold_map: t -> (alpha_i(t), beta_i(t)) for the test rejecting
      when q_i/p_i >= t. Defaults to ``curve.errors_at_threshold``.
  """
  curve: object
  weight: float
  threshold_map: Optional[Callable] = None

  def __post_init__(self):
    if not 0.0 <= self.weight <= 1.0:
      raise ValueError(f'weight must lie in [0, 1], got {self.weight}')
    if self.threshold_map is None:
      object.__setattr__(self, 'threshold_map',
                         self.curve.errors_at_threshold)


def _check_weights(components: Sequence[ComponentCurve]) -> None:
  if not components:
    raise ValueError('need at least one component')
  total = math.fsum(c.weight for c in components)
  if abs(total - 1.0) > WEIGHT_TOL:
    raise ValueError(f'weights sum to {total!r}, not 1')


def joint_concavity(components: Sequence[ComponentCurve],
                    thresholds) -> tradeoff.ParametricCurve:
  """Revealed-index lower bound at the given thresholds.

  alpha(t) = sum_i w_i alpha_i(t) and beta(t) = sum_i w_i beta_i(t). Every
  sample lies on the trade-off curve of the revealed pair, which lies
  below T(P_w, Q_w).

  Args:
    components: Components with weights summing to 1.
    thresholds: Ascending thresholds t >= 0 (inf allowed).

  Returns:
    ParametricCurve ordered by increasing alpha (decreasing t), with
    supporting slope -t at each sample.
  """
  _check_weights(components)
  t = np.asarray(thresholds, dtype=np.float64)
  if t.ndim != 1 or np.any(np.diff(t) < 0) or np.any(t < 0):
    raise ValueError('thresholds must be ascending and non-negative')
  alpha = np.zeros_like(t)
  beta = np.zeros_like(t)
  for comp in components:
    a, b = comp.threshold_map(t)
    alpha = alpha + comp.weight * np.asarray(a)
    beta = beta + comp.weight * np.asarray(b)
  rev = slice(None, None, -1)
  return tradeoff.ParametricCurve(t[rev], alpha[rev], beta[rev], 0.0,
                                  -t[rev])


def _kink_thresholds(components: Sequence[ComponentCurve]) -> np.ndarray:
  ts = [np.array([0.0, np.inf])]
  for comp in components:
    a, b = comp.curve.extended()
    ts.append(-np.diff(b) / np.diff(a))
  return np.unique(np.concatenate(ts))


def joint_concavity_curve(
    components: Sequence[ComponentCurve]) -> PiecewiseLinearTradeoff:
  """Exact revealed-index curve for piecewise-linear components.

  Thresholds at every component slope hit every knot of the revealed
  curve, so joining the samples gives the curve itself.
  """
  pc = joint_concavity(components, _kink_thresholds(components))
  return PiecewiseLinearTradeoff.from_points(pc.alpha, pc.beta)


def diff_weight_components(curves, w, w_prime) -> List[ComponentCurve]:
  """Decomposes (P_w, Q_w') into matched index pairs.

  Diagonal pairs (P_i, Q_i) get min(w_i, w'_i). The leftover P-weights
  w_i - min and Q-weights w'_j - min are coupled in index order
  (north-west corner), giving cross pairs (P_i, Q_j). For two components
  this is exactly the four-term bound with weights min{w_i, w'_i} and
  w'_j - min{w_j, w'_j}; for more components it is one admissible
  coupling among many.

  Args:
    curves: curves[i][j] is T(P_i, Q_j). Only the entries that receive
      weight are touched.
    w: Weights of the P-mixture.
    w_prime: Weights of the Q-mixture.

  Returns:
    Components suitable for ``joint_concavity``.
  """
  w = np.asarray(w, dtype=np.float64)
  wp = np.asarray(w_prime, dtype=np.float64)
  for vec in (w, wp):
    if np.any(vec < 0) or abs(vec.sum() - 1.0) > WEIGHT_TOL:
      raise ValueError('weights must be non-negative and sum to 1')
  if w.shape != wp.shape:
    raise ValueError('weight vectors must have equal length')
  diag = np.minimum(w, wp)
  out = [ComponentCurve(curves[i][i], float(diag[i]))
         for i in range(w.size) if diag[i] > 0]
  rp = w - diag
  rq = wp - diag
  i = j = 0
  while i < w.size and j < w.size:
    if rp[i] <= 1e-15:
      i += 1
      continue
    if rq[j] <= 1e-15:
      j += 1
      continue
    m = min(rp[i], rq[j])
    out.append(ComponentCurve(curves[i][j], float(m)))
    rp[i] -= m
    rq[j] -= m
  # Renormalize away round-off so the weights sum to 1 exactly enough.
  total = math.fsum(c.weight for c in out)
  return [ComponentCurve(c.curve, c.weight / total) for c in out]


def joint_concavity_diff_weights(curves, w, w_prime,
                                 thresholds) -> tradeoff.ParametricCurve:
  """Joint concavity for P_w against Q_w' with different weights."""
  return joint_concavity(diff_weight_components(curves, w, w_prime),
                         thresholds)


def _inf_convolution(parts) -> PiecewiseLinearTradeoff:
  """Conjugate of sum_j lam_j f_j*(. / s_j), as a merged segment list.

  The conjugate of lam f*(y / s) is x -> lam f(s x / lam), so the sum of
  conjugates is an infimal convolution, whose epigraph is the Minkowski
  sum of the scaled epigraphs. Segments are merged in slope order.
  """
  start = 0.0
  dx, dy = [], []
  for lam, scale, f in parts:
    if lam <= 0:
      continue
    a, b = f.extended()
    start += lam * b[0]
    dx.append(lam * np.diff(a) / scale)
    dy.append(lam * np.diff(b))
  dx = np.concatenate(dx)
  dy = np.concatenate(dy)
  order = np.argsort(dy / dx, kind='stable')
  xs = np.concatenate([[0.0], np.cumsum(dx[order])])
  ys = start + np.concatenate([[0.0], np.cumsum(dy[order])])
  xs = np.clip(xs, 0.0, 1.0)
  return PiecewiseLinearTradeoff.from_points(xs, np.clip(ys, 0.0, 1.0))


def advanced_joint_concavity(f11, f12, f21, f22, w: float, gamma: float,
                             eta: float, mixed=None,
                             symmetrize: bool = True
                             ) -> PiecewiseLinearTradeoff:
  """Advanced joint concavity bound for a two-component mixture.

  For 0 <= gamma < w < eta <= 1 the bound is C(G) with

    G* = (1-w)(1-gamma) F11* + w(1-eta) F21* + (1-w) gamma F12*
         + w eta F22*,

  where F1i(x) = f1i(x (1-w)(eta-gamma)/(eta-w)) and
  F2i(x) = f2i(x w (eta-gamma)/(w-gamma)). All conjugates are exact.

  For gamma = eta = w the bound is
  C((1-w) T(P1, Q_mix) + w T(P2, Q_mix)), whose two curves must be passed
  as ``mixed``.

  Args:
    f11, f12, f21, f22: Piecewise-linear fij = T(P_i, Q_j). The diagonal
      curves should be symmetric. Cross curves are not determined by the
      diagonal ones and must come from the caller. They enter through
      their inverses T(Q_j, P_i): the conjugate route bounds
      H(P_i || Q_j), which is read off T(Q_j, P_i). For symmetric cross
      curves this changes nothing; for asymmetric ones the uninverted
      formula can exceed the true mixture curve.
    w: Weight of the second component.
    gamma, eta: Free parameters.
    mixed: (T(P1, Q_mix), T(P2, Q_mix)) for the gamma = eta = w branch.
    symmetrize: Apply C(.) to the result (default). Turning it off exposes
      G itself.

  Raises:
    ValueError: On parameter ordering violations or a missing ``mixed``.
  """
  if not 0.0 <= w <= 1.0:
    raise ValueError('w must lie in [0, 1]')
  if gamma == eta == w:
    if mixed is None:
      raise ValueError('gamma = eta = w needs the curves T(P_i, Q_mix)')
    g = tradeoff.mix_pointwise(list(mixed), [1 - w, w])
  elif 0.0 <= gamma < w < eta <= 1.0:
    s1 = (1 - w) * (eta - gamma) / (eta - w)
    s2 = w * (eta - gamma) / (w - gamma)
    g = _inf_convolution([
        ((1 - w) * (1 - gamma), s1, f11),
        (w * (1 - eta), s2, f21.inverse()),
        ((1 - w) * gamma, s1, f12.inverse()),
        (w * eta, s2, f22),
    ])
  else:
    raise ValueError(
        f'need 0 <= gamma < w < eta <= 1 or gamma = eta = w; got '
        f'gamma={gamma}, w={w}, eta={eta}')
  return tradeoff.symmetrize(g) if symmetrize else g


@dataclasses.dataclass(frozen=True)
class AdvancedChoice:
  curve: PiecewiseLinearTradeoff
  gamma: float
  eta: float
  objective: float


def best_advanced_bound(f11, f12, f21, f22, w: float,
                        alpha: Optional[float] = None,
                        epsilon: Optional[float] = None,
                        grid: int = 32) -> AdvancedChoice:
  """Grid search over (gamma, eta) for the advanced bound.

  gamma runs over w (1 - u) and eta over w + (1 - w) u, with u on a
  log-spaced grid in [1e-3, 1]. Pass ``alpha`` to maximize the curve at
  that level, or ``epsilon`` to minimize delta(epsilon).
  """
  if (alpha is None) == (epsilon is None):
    raise ValueError('pass exactly one of alpha or epsilon')
  u = np.geomspace(1e-3, 1.0, grid)
  gammas = w * (1.0 - u)
  etas = w + (1.0 - w) * u
  best = None
  for gm in gammas:
    for et in etas:
      if not 0 <= gm < w < et <= 1:
        continue
      try:
        c = advanced_joint_concavity(f11, f12, f21, f22, w, gm, et)
      except tradeoff.CurveError:
        continue
      if alpha is not None:
        score = float(c(alpha))
      else:
        score = -tradeoff.to_epsilon_delta(c, epsilon)
      if best is None or score > best.objective:
        best = AdvancedChoice(c, float(gm), float(et), score)
  if best is None:
    raise ValueError('no admissible (gamma, eta) on the grid')
  if epsilon is not None:
    best = dataclasses.replace(best, objective=-best.objective)
  return best


def advanced_shuffle_bound(f0: PiecewiseLinearTradeoff,
                           w: float) -> PiecewiseLinearTradeoff:
  """C(2w Id + (1 - 2w) f0) for P = (1-w)P0 + wQ0, Q = (1-w)Q0 + wP0.

  Raises:
    ValueError: If w is outside [0, 1/2].
  """
  if not 0.0 <= w <= 0.5:
    raise ValueError(f'w must lie in [0, 1/2], got {w}')
  g = tradeoff.mix_pointwise([tradeoff.identity(), f0], [2 * w, 1 - 2 * w])
  return tradeoff.symmetrize(g)


@dataclasses.dataclass(frozen=True)
class EqualityReport:
  holds: bool
  max_deviation: float


def _pq(pair):
  """(p, q) arrays from a DiscretePair or a plain (p, q) tuple.

  Components of a mixture on an aligned support routinely have atoms with
  p = q = 0, which DiscretePair rejects, so tuples are accepted too.
  """
  if isinstance(pair, oracle.DiscretePair):
    return pair.p, pair.q
  p, q = pair
  return np.asarray(p, dtype=np.float64), np.asarray(q, dtype=np.float64)


def _ratios(p, q, other_p, other_q):
  with np.errstate(divide='ignore', invalid='ignore'):
    r = p / q
    r_other = other_p / other_q
  undefined = (p == 0) & (q == 0)
  r = np.where(undefined, r_other, r)
  return r


def equality_diagnostic(pair1, pair2,
                        w: Sequence[float],
                        tol: float = 1e-10) -> EqualityReport:
  """Checks (w1 p1 + w2 p2)/(w1 q1 + w2 q2) = w1 p1/q1 + w2 p2/q2 on supp P_w.

  A component ratio 0/0 is replaced by the other component's ratio.
  Deviations are relative, |L - R| / max(1, |L|, |R|), and +inf on both
  sides counts as agreement.

  Note: this identity is necessary for the joint-concavity bound to be
  tight, but not sufficient. See ``ratio_agreement`` for a criterion that
  is.

  Args:
    pair1, pair2: Components on a shared, aligned support, as
      DiscretePair or (p, q) arrays.
    w: (w1, w2).
    tol: Tolerance on the relative deviation.
  """
  w1, w2 = float(w[0]), float(w[1])
  (p1, q1), (p2, q2) = _pq(pair1), _pq(pair2)
  r1 = _ratios(p1, q1, p2, q2)
  r2 = _ratios(p2, q2, p1, q1)
  pw = w1 * p1 + w2 * p2
  qw = w1 * q1 + w2 * q2
  supp = pw > 0
  with np.errstate(divide='ignore', invalid='ignore'):
    lhs = pw[supp] / qw[supp]
    rhs = w1 * r1[supp] + w2 * r2[supp]
  both_inf = np.isinf(lhs) & np.isinf(rhs)
  with np.errstate(invalid='ignore'):
    dev = np.abs(lhs - rhs) / np.maximum.reduce(
        [np.ones_like(lhs), np.abs(lhs), np.abs(rhs)])
  dev = np.where(both_inf, 0.0, dev)
  dev = np.where(np.isnan(dev), np.inf, dev)
  worst = float(dev.max()) if dev.size else 0.0
  return EqualityReport(worst <= tol, worst)


def ratio_agreement(pairs,
                    w: Sequence[float], tol: float = 1e-10) -> EqualityReport:
  """Tightness test for joint concavity on discrete supports.

  The mixture curve equals the revealed-index curve exactly when, at
  every atom, all components with mass there share one likelihood ratio
  p_i/q_i. Any atom where two ratios differ loses information when the
  index is hidden.
  """
  rs = []
  for pr, wi in zip(pairs, w):
    if wi <= 0:
      continue
    p, q = _pq(pr)
    with np.errstate(divide='ignore', invalid='ignore'):
      r = np.where((p == 0) & (q == 0), np.nan, np.arctan2(p, q))
    rs.append(r)
  stack = np.vstack(rs)
  with np.errstate(invalid='ignore'):
    spread = np.nanmax(stack, axis=0) - np.nanmin(stack, axis=0)
  spread = np.nan_to_num(spread, nan=0.0)
  worst = float(spread.max()) if spread.size else 0.0
  return EqualityReport(worst <= tol, worst)


@dataclasses.dataclass(frozen=True)
class ConvexityReport:
  kind: str
  lhs: float
  rhs: float

  @property
  def holds(self) -> bool:
    return self.lhs <= self.rhs + 1e-10 * max(1.0, abs(self.rhs))


def _hs(p, q, gamma):
  return math.fsum(np.maximum(p - gamma * q, 0.0).tolist())


def _power(p, q, order):
  mask = p > 0
  if np.any(mask & (q == 0)):
    return math.inf
  return math.fsum((q[mask] ** (1 - order) * p[mask] ** order).tolist())


def divergence_joint_convexity_check(pairs: Sequence[oracle.DiscretePair],
                                     w: Sequence[float],
                                     gamma: Optional[float] = None,
                                     order: Optional[float] = None
                                     ) -> List[ConvexityReport]:
  """Both sides of D(P_w || Q_w) <= sum_i w_i D(P_i || Q_i).

  Covers the hockey-stick divergence H_gamma and the power divergence
  E_Q[(p/q)^order] (exp((order - 1) R_order) for Renyi order > 1).
  """
  w = np.asarray(w, dtype=np.float64)
  pw = sum(wi * pr.p for wi, pr in zip(w, pairs))
  qw = sum(wi * pr.q for wi, pr in zip(w, pairs))
  out = []
  if gamma is not None:
    rhs = math.fsum(wi * _hs(pr.p, pr.q, gamma) for wi, pr in zip(w, pairs))
    out.append(ConvexityReport(f'hockey_stick({gamma:g})',
                               _hs(pw, qw, gamma), rhs))
  if order is not None:
    rhs = math.fsum(
        wi * _power(pr.p, pr.q, order) for wi, pr in zip(w, pairs))
    out.append(ConvexityReport(f'power({order:g})', _power(pw, qw, order),
                               rhs))
  return out


def advanced_hs_parameters(w: float, eps_prime: float, gamma: float,
                           eta: float) -> Tuple[float, float]:
  """Solves the two constraints for (eps_0, eps_1) given eps', gamma, eta.

  exp(eps') = (1-w) e^eps0 + w e^eps1 and
  e^eps0 (1-w) gamma + e^eps1 w eta = e^eps' w.

  Raises:
    ValueError: If the solution has eps_0 or eps_1 negative.
  """
  big = math.exp(eps_prime)
  e0 = big * (eta - w) / ((1 - w) * (eta - gamma))
  e1 = big * (w - gamma) / (w * (eta - gamma))
  if e0 < 1 or e1 < 1:
    raise ValueError('parameters give a negative eps_0 or eps_1')
  return math.log(e0), math.log(e1)


def advanced_hs_check(p1, q1, p2, q2, w: float, eps_prime: float,
                      gamma: float, eta: float) -> ConvexityReport:
  """Both sides of the advanced hockey-stick joint-convexity inequality.

  H_{e^eps'}((1-w)P1 + wP2 || (1-w)Q1 + wQ2) is compared with
  (1-w) H_{e^eps0}(P1 || (1-gamma)Q1 + gamma Q2)
  + w H_{e^eps1}(P2 || (1-eta)Q1 + eta Q2).
  """
  eps0, eps1 = advanced_hs_parameters(w, eps_prime, gamma, eta)
  lhs = _hs((1 - w) * p1 + w * p2, (1 - w) * q1 + w * q2,
            math.exp(eps_prime))
  rhs = ((1 - w) * _hs(p1, (1 - gamma) * q1 + gamma * q2, math.exp(eps0)) +
         w * _hs(p2, (1 - eta) * q1 + eta * q2, math.exp(eps1)))
  return ConvexityReport('advanced_hockey_stick', lhs, rhs)
