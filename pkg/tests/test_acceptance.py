"""Acceptance criteria 1-8, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v``. The verdict lines are
printed even under output capture. Tolerances are the stated ones; no
criterion is relaxed to make it pass.
"""

import math
import time

import numpy as np
import pytest

from conftest import random_curve, random_min_branch_curve, random_pmf
from mixfdp import cli, dpgd, mixture, oracle, shuffle, tradeoff
from mixfdp.mixture import ComponentCurve
from test_mixture import (_N2_I0, _N2_I1, _grid, _mixture_curve,
                          _revealed_curve)

N, EPS0 = 10000, 4.444


@pytest.fixture
def verdict(capsys):
  def report(label, ok, detail):
    with capsys.disabled():
      print(f'\n{"PASS" if ok else "FAIL"}  criterion {label}: {detail}')
    assert ok, detail
  return report


@pytest.fixture(scope='module')
def params():
  return shuffle.ShuffleParams(N, EPS0)


def test_criterion_1_table1(verdict, params):
  start = time.perf_counter()
  vals = [shuffle.shuffle_delta(params, e) for e in cli.TABLE1_EPS]
  elapsed = time.perf_counter() - start
  ratios = [v / r for v, r in zip(vals, cli.TABLE1_DELTA)]
  ok = all(0.5 <= r <= 2.0 for r in ratios) and elapsed <= 60
  detail = ('ratios ' + ' '.join(f'{r:.3g}' for r in ratios) +
            f' (need [0.5, 2]); {elapsed:.1f} s (need <= 60 s)')
  verdict('1 (Table 1 delta)', ok, detail)


def test_criterion_2_table2(verdict, params):
  vals = [shuffle.shuffle_epsilon(params, d) for d in cli.TABLE2_DELTA]
  errs = [abs(v - r) for v, r in zip(vals, cli.TABLE2_EPS)]
  detail = ('eps ' + ' '.join(f'{v:.4f}' for v in vals) +
            f'; max |err| {max(errs):.4f} (need <= 0.01)')
  verdict('2 (Table 2 epsilon)', max(errs) <= 0.01, detail)


def test_criterion_3_sandwich(verdict, params):
  start = time.perf_counter()
  pair = oracle.build_shuffle_pair(params)
  eps_exact = oracle.exact_epsilon(pair, 3e-6)
  grid = np.linspace(0.05, 1.0, 20)
  excess = max(oracle.exact_hockey_stick(pair, math.exp(e)) -
               shuffle.shuffle_delta(params, e) for e in grid)
  elapsed = time.perf_counter() - start
  ok = 0.46 <= eps_exact <= 0.50 and excess <= 1e-12 and elapsed <= 600
  detail = (f'exact eps {eps_exact:.5f} (need [0.46, 0.50]); worst '
            f'H - delta {excess:.3g} (need <= 1e-12); {elapsed:.1f} s')
  verdict('3 (oracle sandwich)', ok, detail)


def test_criterion_4_base_knots_exact(verdict):
  worst = 0.0
  for n in (2, 17, 100, 500):
    for eps0 in (0.5, 1.0, 3.0):
      p = shuffle.ShuffleParams(n, eps0)
      knots = shuffle.base_knots(p, 'all')
      exact = oracle.exact_tradeoff(oracle.build_shuffle_pair(p, base=True))
      worst = max(worst,
                  float(np.max(np.abs(exact(knots.alpha) - knots.beta))),
                  float(np.max(np.abs(knots(exact.alpha) - exact.beta))))
  verdict('4 (base knots exact)', worst <= 1e-11,
          f'max knot deviation {worst:.3g} (need <= 1e-11)')


def test_criterion_5_figure2(verdict):
  vals = cli.fig2_values()
  rel = {k: abs(vals[k] - ref) / ref for k, ref in cli.FIG2_CAPTION.items()}
  detail = '; '.join(
      f'{k} {vals[k]:.3g} vs {cli.FIG2_CAPTION[k]:g} ({100 * rel[k]:.0f}% off)'
      for k in vals) + ' (need <= 20%)'
  verdict('5 (Figure 2 deltas)', all(r <= 0.2 for r in rel.values()), detail)


def test_criterion_6a_noclip_closed_form(verdict):
  s = dpgd.dpgd_curve(dpgd.InitSensitivityModel('noclip', a=1.0))
  g = tradeoff.gdp_curve(1 / math.sqrt(2))
  gap = float(np.max(np.abs(g(s.alpha) - s.beta)))
  verdict('6(a) (no-clip vs G_{1/sqrt 2})', gap <= 1e-6,
          f'max |beta - G(alpha)| {gap:.3g} (need <= 1e-6)')


def test_criterion_6b_clip_dominates(verdict):
  worst = []
  for c in (0.5, 2.0, 3.0):
    rep = dpgd.amplification_report(dpgd.InitSensitivityModel('clip', c=c))
    # Certified: the margin clears the quadrature error bound.
    worst.append(float(np.min(rep.margin - rep.error_bound)))
  detail = ('min certified margin ' +
            ' '.join(f'c={c:g}:{m:.3g}' for c, m in zip((0.5, 2, 3), worst)))
  verdict('6(b) (clip dominates G_c)', min(worst) > 0, detail)


def test_criterion_6c_margin_grows(verdict):
  mid = [float(dpgd.amplification_report(
      dpgd.InitSensitivityModel('clip', c=c), alpha_grid=[0.5]).margin[0])
         for c in (0.5, 2.0, 3.0)]
  verdict('6(c) (margin increasing in c)', bool(np.all(np.diff(mid) > 0)),
          'margins at alpha=0.5: ' + ' '.join(f'{m:.4g}' for m in mid))


def test_criterion_6d_monte_carlo(verdict):
  model = dpgd.InitSensitivityModel('clip', a=1.0, c=2.0)
  t = np.sort(np.random.default_rng(0).uniform(-4, 4, 10))
  s = dpgd.dpgd_curve(model, t_grid=t)
  z = []
  for k, tk in enumerate(t):
    mc = dpgd.monte_carlo_errors(model, float(tk), 10_000_000, seed=k)
    z.append(abs(mc.alpha - s.alpha[k]) / mc.alpha_se)
    z.append(abs(mc.beta - s.beta[k]) / mc.beta_se)
  verdict('6(d) (Monte Carlo agreement)', max(z) <= 3,
          f'max |quad - MC| / se {max(z):.2f} over 10 t (need <= 3)')


def _property_suites():
  failed = []
  rng = np.random.default_rng(2024)

  # Curve validator on every constructor.
  base = shuffle.base_knots(shuffle.ShuffleParams(60, 1.5), 'all')
  made = [tradeoff.identity(), tradeoff.zero_curve(),
          tradeoff.pure_dp_curve(0.3), tradeoff.approx_dp_curve(1.0, 0.05),
          tradeoff.gdp_curve(1.5).to_knots(101, 'chord'),
          tradeoff.gdp_curve(1.5).to_knots(101, 'tangent'),
          tradeoff.mix_pointwise([tradeoff.identity(), base], [0.3, 0.7]),
          tradeoff.symmetrize(random_min_branch_curve(rng)),
          random_curve(rng).inverse(), base,
          shuffle.shuffle_curve(shuffle.ShuffleParams(60, 1.5)),
          oracle.exact_tradeoff(oracle.build_shuffle_pair(
              shuffle.ShuffleParams(8, 1.0))),
          dpgd.dpgd_curve(dpgd.InitSensitivityModel('clip', c=2.0))
          .to_tradeoff('tangent')]
  try:
    for f in made:
      tradeoff.check_curve(f)
  except tradeoff.CurveError:
    failed.append('validator')

  # Conjugate involution.
  dev = 0.0
  for _ in range(50):
    f = random_curve(rng, 8)
    g = tradeoff.conjugate(f).biconjugate()
    dev = max(dev, float(np.max(np.abs(g(f.alpha) - f.beta))))
  if dev > 1e-13:
    failed.append(f'involution {dev:.2g}')

  # Symmetrize idempotence.
  dev = 0.0
  for _ in range(50):
    g = tradeoff.symmetrize(random_min_branch_curve(rng, 6))
    h = tradeoff.symmetrize(g)
    dev = max(dev, float(np.max(np.abs(h(g.alpha) - g.beta))))
  if dev > 1e-13:
    failed.append(f'idempotence {dev:.2g}')

  # Joint concavity below the oracle on 100 random 3-atom mixtures.
  worst = -np.inf
  for _ in range(100):
    ps = [random_pmf(rng, 3, 0.2) for _ in range(2)]
    qs = [random_pmf(rng, 3, 0.2) for _ in range(2)]
    w = rng.dirichlet(np.ones(2))
    jc, ex = _revealed_curve(ps, qs, w), _mixture_curve(ps, qs, w)
    x = _grid(jc, ex)
    worst = max(worst, float(np.max(jc(x) - ex(x))))
  if worst > 1e-10:
    failed.append(f'joint concavity {worst:.2g}')

  # Symmetry pairing for symmetric components.
  comps = [ComponentCurve(tradeoff.gdp_curve(0.5), 0.3),
           ComponentCurve(tradeoff.gdp_curve(2.0), 0.7)]
  pc = mixture.joint_concavity(comps, np.geomspace(1e-2, 1e2, 41))
  dev = float(np.max(np.abs(pc.alpha - pc.beta[::-1])))
  if dev > 1e-10:
    failed.append(f'pairing {dev:.2g}')

  # Hockey-stick and power-divergence joint convexity on 50 instances.
  for _ in range(50):
    pairs = [oracle.DiscretePair.from_probs(random_pmf(rng, 4),
                                            random_pmf(rng, 4))
             for _ in range(3)]
    w = rng.dirichlet(np.ones(3))
    reps = mixture.divergence_joint_convexity_check(
        pairs, w, gamma=math.exp(float(rng.uniform(0, 2))),
        order=float(rng.uniform(1.5, 4)))
    if not all(r.holds for r in reps):
      failed.append('divergence convexity')
      break

  # Equality diagnostic.
  p2 = shuffle.ShuffleParams(2, math.log(3))
  ok = mixture.equality_diagnostic(_N2_I0, _N2_I1,
                                   (1 - p2.p_c, p2.p_c)).holds
  c1 = (np.array([0.5, 0.5, 0, 0]), np.array([0.2, 0.8, 0, 0]))
  c2 = (np.array([0, 0, 0.3, 0.7]), np.array([0, 0, 0.6, 0.4]))
  ok &= mixture.equality_diagnostic(c1, c2, (0.35, 0.65)).holds
  for _ in range(20):
    ps = [random_pmf(rng, 3) for _ in range(2)]
    qs = [random_pmf(rng, 3) for _ in range(2)]
    rep = mixture.equality_diagnostic((ps[0], qs[0]), (ps[1], qs[1]),
                                      (0.4, 0.6))
    jc, ex = _revealed_curve(ps, qs, (0.4, 0.6)), _mixture_curve(
        ps, qs, (0.4, 0.6))
    gap = float(np.max(ex(_grid(jc, ex)) - jc(_grid(jc, ex))))
    ok &= (not rep.holds) and gap > 0
  if not ok:
    failed.append('equality diagnostic')
  return failed


def test_criterion_7_property_suites(verdict):
  failed = _property_suites()
  verdict('7 (property suites)', not failed,
          'all seven suites hold' if not failed else
          'failed: ' + ', '.join(failed))


def test_criterion_8_determinism(verdict, tmp_path, monkeypatch, capsys):
  monkeypatch.chdir(tmp_path)
  commands = [
      ('shuffle', 'curve', '--n', '1000', '--eps0', '2', '--grid', '128'),
      ('shuffle', 'epsilon', '--n', '10000', '--eps0', '4.444', '--delta',
       '3e-6'),
      ('dpgd', 'compare', '--c', '2'),
      ('oracle', '--n', '40', '--eps0', '1', '--exact-tradeoff'),
  ]
  mismatched = []
  for argv in commands:
    blobs = set()
    for threads in ('1', '1', '3', '8'):
      cli.main([*argv, '--threads', threads, '--output', 'out'])
      stdout = capsys.readouterr().out
      blobs.add((tmp_path / 'out').read_bytes() + stdout.encode())
    if len(blobs) != 1:
      mismatched.append(argv[0] + ' ' + argv[1])
  verdict('8 (determinism)', not mismatched,
          f'{len(commands)} commands x 4 runs (threads 1, 1, 3, 8) '
          + ('byte-identical' if not mismatched else
             'differ: ' + ', '.join(mismatched)))
