"""Shuffle amplification: base knots, amplified curve, delta and epsilon."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixfdp import oracle, shuffle, tradeoff
from mixfdp.shuffle import ShuffleParams


class TestParams:

  @pytest.mark.parametrize('n,eps0,tau', [(0, 1.0, 1e-15), (2.5, 1.0, 1e-15),
                                          (5, 0.0, 1e-15), (5, 1.0, 1.0)])
  def test_rejects_invalid(self, n, eps0, tau):
    with pytest.raises(ValueError):
      ShuffleParams(n, eps0, tau)

  def test_window_drops_at_most_tau(self):
    p = ShuffleParams(5000, 2.0)
    win = p.window
    assert win.tail_mass <= p.truncation_tau
    assert 0 < win.lo < win.hi < 5000


class TestBaseKnots:

  @pytest.mark.parametrize('n', [2, 17, 100, 500])
  @pytest.mark.parametrize('eps0', [0.5, 1.0, 3.0])
  def test_matches_enumerated_base_pair(self, n, eps0):
    params = ShuffleParams(n, eps0)
    knots = shuffle.base_knots(params, 'all')
    exact = oracle.exact_tradeoff(oracle.build_shuffle_pair(params, True))
    np.testing.assert_allclose(exact(knots.alpha), knots.beta, atol=1e-11)
    np.testing.assert_allclose(knots(exact.alpha), exact.beta, atol=1e-11)

  def test_single_user_base_pair_is_disjoint(self):
    knots = shuffle.base_knots(ShuffleParams(1, 1.0), 'all')
    assert np.all(knots(np.linspace(0, 1, 11)) == 0.0)

  def test_single_user_bound_is_loose(self):
    # With one user the base pair is disjoint, so the amplified curve is
    # C(2w Id), not the randomized-response curve it bounds.
    params = ShuffleParams(1, 1.2)
    f = shuffle.shuffle_curve(params)
    np.testing.assert_allclose(f.alpha, [0, 2 * params.w], rtol=1e-15)
    np.testing.assert_allclose(f.beta, [2 * params.w, 0], rtol=1e-15)
    rr = tradeoff.pure_dp_curve(params.eps0)
    x = np.linspace(0, 1, 101)
    assert np.all(f(x) <= rr(x) + 1e-15)

  @pytest.mark.parametrize('k', [16, 64, 200])
  def test_grid_is_a_lower_bound(self, k):
    params = ShuffleParams(100, 1.0)
    exact = shuffle.base_knots(params, 'all')
    grid = shuffle.base_knots(params, k)
    assert grid.bound == tradeoff.LOWER
    x = np.union1d(exact.alpha, grid.alpha)
    # Knot merging below 1e-15 in alpha can lower the exact curve by
    # |slope| * 1e-15, well inside the curve tolerance.
    assert np.all(grid(x) <= exact(x) + tradeoff.DEFAULT_TOL)
    assert len(grid) >= min(k, len(exact))

  def test_geometric_grid_is_a_lower_bound(self):
    params = ShuffleParams(1000, 3.0)
    exact = shuffle.base_knots(params, 'all')
    old = shuffle.RATIO_GRID_CAP
    shuffle.RATIO_GRID_CAP = 0
    try:
      grid = shuffle.base_knots(params, 128)
    finally:
      shuffle.RATIO_GRID_CAP = old
    x = np.union1d(exact.alpha, grid.alpha)
    assert np.all(grid(x) <= exact(x) + tradeoff.DEFAULT_TOL)
    assert np.max(exact(x) - grid(x)) < 1e-2

  def test_all_rejects_large_n(self):
    with pytest.raises(ValueError):
      shuffle.base_knots(ShuffleParams(5000, 1.0), 'all')

  def test_unknown_policy(self):
    with pytest.raises(ValueError):
      shuffle.base_knots(ShuffleParams(10, 1.0), 'some')

  def test_result_does_not_depend_on_thread_count(self):
    params = ShuffleParams(1500, 2.0)
    one = shuffle.base_knots(params, 'all', threads=1)
    many = shuffle.base_knots(params, 'all', threads=4)
    np.testing.assert_array_equal(one.alpha, many.alpha)
    np.testing.assert_array_equal(one.beta, many.beta)


class TestDelta:

  @pytest.mark.parametrize('eps', [0.05, 0.3, 0.8, 1.5])
  def test_closed_form_matches_curve_conjugate(self, eps):
    params = ShuffleParams(100, 1.0)
    via_curve = tradeoff.to_epsilon_delta(shuffle.shuffle_curve(params), eps)
    assert shuffle.shuffle_delta(params, eps) == pytest.approx(via_curve,
                                                               abs=1e-12)

  @given(st.integers(1, 60), st.floats(0.2, 4.0), st.floats(0.0, 3.0))
  @settings(max_examples=40, deadline=None)
  def test_upper_bounds_the_exact_mechanism(self, n, eps0, eps):
    params = ShuffleParams(n, eps0)
    pair = oracle.build_shuffle_pair(params)
    assert oracle.exact_hockey_stick(pair, math.exp(eps)) <= (
        shuffle.shuffle_delta(params, eps) + 1e-12)

  @given(st.integers(1, 300), st.floats(0.2, 5.0))
  @settings(max_examples=30, deadline=None)
  def test_nonincreasing_in_epsilon(self, n, eps0):
    params = ShuffleParams(n, eps0)
    d = [shuffle.shuffle_delta(params, e) for e in np.linspace(0, 3, 13)]
    assert all(b <= a + 1e-15 for a, b in zip(d, d[1:]))

  def test_truncation_only_adds_the_dropped_mass(self):
    kept = ShuffleParams(2000, 1.0, truncation_tau=1e-12)
    full = ShuffleParams(2000, 1.0, truncation_tau=0.0)
    for eps in (0.1, 0.3):
      lo = shuffle.shuffle_delta(full, eps)
      hi = shuffle.shuffle_delta(kept, eps)
      assert lo <= hi <= lo + kept.window.tail_mass + 1e-15

  def test_levels_off_at_the_mixture_floor(self):
    # Q0 puts mass E[2^-C] on atoms with a = 0, where P0 has none, so the
    # amplified bound keeps delta >= (1 - 2w) E[2^-C] for every eps.
    params = ShuffleParams(20, 1.0, truncation_tau=0.0)
    floor = (1 - 2 * params.w) * (1 - params.p_c / 2)**(params.n - 1)
    assert shuffle.shuffle_delta(params, 60.0) == pytest.approx(floor,
                                                                rel=1e-12)
    with pytest.raises(shuffle.NonConvergence):
      shuffle.shuffle_epsilon(params, floor / 2)

  def test_corollary_rule_is_close_but_never_above(self):
    params = ShuffleParams(1000, 2.0)
    for eps in (0.2, 0.4, 0.6):
      exact = shuffle.shuffle_delta(params, eps)
      cor = shuffle.shuffle_delta(params, eps, slope_rule='corollary')
      assert cor <= exact * (1 + 1e-12)
      assert cor >= 0.5 * exact

  def test_rejects_bad_inputs(self):
    params = ShuffleParams(10, 1.0)
    with pytest.raises(ValueError):
      shuffle.shuffle_delta(params, -0.1)
    with pytest.raises(ValueError):
      shuffle.shuffle_delta(params, 0.5, slope_rule='other')
    with pytest.raises(ValueError):
      shuffle.shuffle_epsilon(params, 0.0)

  @pytest.mark.parametrize('eps0', [5.444, 30.0])
  def test_large_local_budgets_stay_finite(self, eps0):
    params = ShuffleParams(10000, eps0)
    d = shuffle.shuffle_delta(params, 1.0)
    assert 0.0 <= d <= 1.0


class TestEpsilon:

  @pytest.mark.parametrize('delta', [1e-3, 1e-6, 1e-9])
  def test_round_trip(self, delta):
    params = ShuffleParams(1000, 2.0)
    report = shuffle.epsilon_report(params, delta)
    assert shuffle.shuffle_delta(params, report.result) == pytest.approx(
        delta, rel=1e-6)
    assert report.to_record()['delta'] == delta

  def test_already_satisfied(self):
    assert shuffle.shuffle_epsilon(ShuffleParams(1000, 0.3), 0.9) == 0.0
