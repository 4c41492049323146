"""Command-line entry point.

  mixfdp shuffle {curve,delta,epsilon} ...
  mixfdp dpgd {curve,compare} ...
  mixfdp oracle ...
  mixfdp reproduce {t1,t2,fig1,fig2,fig3}

Exit codes: 0 success, 1 a reproduction target missed its tolerance,
2 invalid input, 3 numeric non-convergence. Scalars go to stdout with 6
significant digits; files carry a metadata header (CSV comments or a JSON
``metadata`` field) with the version, the full configuration and error
bounds. No timestamps are written, so equal configurations give equal
bytes.
"""

import argparse
import dataclasses
import io
import json
import math
import sys
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

import mixfdp
from mixfdp import _pool
from mixfdp import dpgd
from mixfdp import mixture
from mixfdp import oracle
from mixfdp import shuffle
from mixfdp import tradeoff

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3


class _UsageError(ValueError):
  pass


def _fmt(x: float) -> str:
  return f'{x:.6g}'


def _config(args) -> Dict:
  # Thread count never changes results, so it stays out of the echo and
  # outputs match byte for byte across --threads.
  return {k: v for k, v in sorted(vars(args).items())
          if k not in ('func', 'threads')}


def _metadata(args, **extra) -> Dict:
  meta = {'version': mixfdp.__version__, 'config': _config(args)}
  meta.update(extra)
  return meta


def _csv_text(meta: Dict, header: Sequence[str], rows) -> str:
  buf = io.StringIO()
  for key, val in meta.items():
    buf.write(f'# {key}: {json.dumps(val, sort_keys=True)}\n')
  buf.write(','.join(header) + '\n')
  for row in rows:
    buf.write(','.join(f'{float(v):.17g}' for v in row) + '\n')
  return buf.getvalue()


def _json_text(meta: Dict, header: Sequence[str], rows) -> str:
  cols = {h: [] for h in header}
  for row in rows:
    for h, v in zip(header, row):
      cols[h].append(float(v))
  return json.dumps({'metadata': meta, 'data': cols}, sort_keys=True,
                    indent=1) + '\n'


def _emit_table(args, meta: Dict, header: Sequence[str], rows) -> None:
  """Writes the table to --output in --format; no file when unset."""
  if not args.output:
    return
  text = (_json_text if args.format == 'json' else _csv_text)(
      meta, header, rows)
  with open(args.output, 'w', encoding='utf-8', newline='\n') as fh:
    fh.write(text)


def _emit_record(args, record: Dict) -> None:
  if not args.output:
    return
  with open(args.output, 'w', encoding='utf-8', newline='\n') as fh:
    fh.write(json.dumps(record, sort_keys=True, indent=1) + '\n')


def _positive_int(text: str) -> int:
  val = int(text)
  if val < 1:
    raise argparse.ArgumentTypeError(f'expected a positive integer: {text}')
  return val


# shuffle ------------------------------------------------------------------


def _shuffle_params(args) -> shuffle.ShuffleParams:
  return shuffle.ShuffleParams(args.n, args.eps0, args.tau)


def cmd_shuffle(args) -> int:
  params = _shuffle_params(args)
  if args.sub == 'curve':
    policy = 'all' if args.grid is None else shuffle.Grid(args.grid)
    curve = shuffle.shuffle_curve(params, policy, threads=args.threads)
    tradeoff.check_curve(curve)
    meta = _metadata(args, bound=curve.bound,
                     tail_mass=params.window.tail_mass, knots=len(curve))
    _emit_table(args, meta, ('alpha', 'beta'),
                zip(curve.alpha, curve.beta))
    print(len(curve))
    return EXIT_OK
  if args.sub == 'delta':
    if args.eps is None:
      raise _UsageError('shuffle delta needs --eps')
    res = shuffle.delta_report(params, args.eps, args.slope_rule)
  else:
    if args.delta is None:
      raise _UsageError('shuffle epsilon needs --delta')
    res = shuffle.epsilon_report(params, args.delta, args.slope_rule)
  _emit_record(args, {'metadata': _metadata(args), **res.to_record()})
  print(_fmt(res.result))
  return EXIT_OK


# dpgd ---------------------------------------------------------------------


def _dpgd_model(args) -> dpgd.InitSensitivityModel:
  if args.model == 'clip':
    if args.c is None:
      raise _UsageError('the clip model needs --c')
    return dpgd.InitSensitivityModel('clip', a=args.a, c=args.c,
                                     sigma=args.sigma)
  if args.model == 'logistic':
    return dpgd.InitSensitivityModel('logistic', a=args.a, sigma=args.sigma,
                                     M=args.M)
  return dpgd.InitSensitivityModel('noclip', a=args.a, sigma=args.sigma)


def cmd_dpgd(args) -> int:
  if args.sub == 'compare':
    args.model = 'clip'
  model = _dpgd_model(args)
  quad = dpgd.QuadratureSpec(tolerance=args.tol)
  t_grid = dpgd.model_t_grid(model, quad, args.points)
  if args.sub == 'curve':
    samples = dpgd.dpgd_curve(model, quad, t_grid, args.threads)
    meta = _metadata(args, error_bound=float(samples.err.max()))
    _emit_table(args, meta, ('t', 'alpha', 'beta', 'err'),
                zip(samples.t, samples.alpha, samples.beta, samples.err))
    print(len(samples))
    return EXIT_OK
  if not model.c > 0:
    raise _UsageError('dpgd compare needs --c > 0')
  rep = dpgd.amplification_report(model, quad, t_grid=t_grid,
                                  threads=args.threads)
  meta = _metadata(args, error_bound=rep.error_bound)
  _emit_table(args, meta, ('alpha', 'f_init', 'g_c', 'margin'), rep.rows())
  print(_fmt(float(rep.margin.min())))
  return EXIT_OK


# oracle -------------------------------------------------------------------


def cmd_oracle(args) -> int:
  started = time.perf_counter()
  pair = oracle.build_shuffle_pair(shuffle.ShuffleParams(args.n, args.eps0),
                                   base=args.base)
  record = {'n': args.n, 'eps0': args.eps0, 'atoms': len(pair)}
  if args.exact_tradeoff:
    curve = oracle.exact_tradeoff(pair)
    meta = _metadata(args, atoms=len(pair), knots=len(curve))
    _emit_table(args, meta, ('alpha', 'beta'), zip(curve.alpha, curve.beta))
    for x, y in zip(curve.alpha, curve.beta):
      print(f'{_fmt(x)},{_fmt(y)}')
    return EXIT_OK
  if args.gamma is not None:
    value = (oracle.sampled_delta_lower_bound(pair, args.gamma, args.draws,
                                              args.seed)
             if args.monte_carlo else
             oracle.exact_hockey_stick(pair, args.gamma))
    record.update(gamma=args.gamma, value=value)
  elif args.delta is not None:
    value = oracle.exact_epsilon(pair, args.delta)
    record.update(delta=args.delta, value=value)
  else:
    raise _UsageError('oracle needs --exact-tradeoff, --gamma or --delta')
  if args.timing:
    record['runtime_ms'] = round(1000 * (time.perf_counter() - started), 3)
  _emit_record(args, {'metadata': _metadata(args), **record})
  print(_fmt(value))
  return EXIT_OK


# reproduce ----------------------------------------------------------------


@dataclasses.dataclass
class _Row:
  label: str
  reference: float
  computed: float
  ok: bool

  @property
  def ratio(self) -> float:
    if self.reference == 0:
      return math.nan
    return self.computed / self.reference


TABLE1_EPS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
TABLE1_DELTA = (3e-6, 1e-7, 4e-9, 9e-11, 2e-12, 2e-14)
TABLE2_DELTA = (5e-5, 3e-6, 1e-7, 4e-9, 9e-11)
TABLE2_EPS = (0.4, 0.5, 0.6, 0.7, 0.8)
N_TABLES, EPS0_TABLES = 10000, 4.444
FIG2_N, FIG2_EPS0, FIG2_EPS = 100, math.log(2), 0.5
FIG2_CAPTION = {'plain': 0.0020, 'advanced': 1.5e-6}


def _reproduce_t1(args) -> List[_Row]:
  params = shuffle.ShuffleParams(N_TABLES, EPS0_TABLES)
  rows = []
  for eps, ref in zip(TABLE1_EPS, TABLE1_DELTA):
    d = shuffle.shuffle_delta(params, eps)
    rows.append(_Row(f'delta(eps={eps:g})', ref, d, ref / 2 <= d <= 2 * ref))
  return rows


def _reproduce_t2(args) -> List[_Row]:
  params = shuffle.ShuffleParams(N_TABLES, EPS0_TABLES)
  rows = []
  for delta, ref in zip(TABLE2_DELTA, TABLE2_EPS):
    e = shuffle.shuffle_epsilon(params, delta)
    rows.append(_Row(f'eps(delta={delta:g})', ref, e, abs(e - ref) <= 0.01))
  return rows


def _reproduce_fig1(args) -> List[_Row]:
  # The figure is a picture; the checkable content is that the curve is a
  # valid symmetric trade-off function for every eps0, including 5.444.
  delta = N_TABLES**-1.5
  rows = []
  for eps0 in (5.444, 4.444, 3.444):
    params = shuffle.ShuffleParams(N_TABLES, eps0)
    curve = shuffle.shuffle_curve(params, shuffle.Grid(), threads=args.threads)
    tradeoff.check_curve(curve)
    eps = tradeoff.invert_epsilon(curve, delta)
    ok = curve.is_symmetric(1e-9) and math.isfinite(eps) and eps < eps0
    rows.append(_Row(f'eps(delta=n^-1.5), eps0={eps0:g}', math.nan, eps, ok))
  return rows


def fig2_values(n: int = FIG2_N, eps0: float = FIG2_EPS0,
                eps: float = FIG2_EPS) -> Dict[str, float]:
  """Plain and advanced joint-concavity delta for the w = 1/3 mixture."""
  params = shuffle.ShuffleParams(n, eps0)
  f0 = shuffle.base_knots(params, 'all')
  adv = mixture.advanced_shuffle_bound(f0, params.w)
  return {'plain': float(tradeoff.to_epsilon_delta(f0, eps)),
          'advanced': float(tradeoff.to_epsilon_delta(adv, eps))}


def _reproduce_fig2(args) -> List[_Row]:
  vals = fig2_values()
  return [_Row(f'{k} delta(eps=0.5)', ref, vals[k],
               abs(vals[k] - ref) <= 0.2 * ref)
          for k, ref in FIG2_CAPTION.items()]


def _reproduce_fig3(args) -> List[_Row]:
  rows = []
  mid = []
  for c in (0.5, 2.0, 3.0):
    model = dpgd.InitSensitivityModel('clip', a=1.0, c=c)
    rep = dpgd.amplification_report(model, threads=args.threads)
    mid.append(float(rep.margin[4]))
    rows.append(_Row(f'min margin, c={c:g}', math.nan,
                     float(rep.margin.min()), bool(np.all(rep.margin > 0))))
  rows.append(_Row('margin(0.5) increasing in c', math.nan, mid[-1],
                   bool(np.all(np.diff(mid) > 0))))
  return rows


REPRODUCE: Dict[str, Callable] = {
    't1': _reproduce_t1,
    't2': _reproduce_t2,
    'fig1': _reproduce_fig1,
    'fig2': _reproduce_fig2,
    'fig3': _reproduce_fig3,
}


def cmd_reproduce(args) -> int:
  rows = REPRODUCE[args.table](args)
  print(f'{"quantity":<36} {"reference":>12} {"computed":>12} '
        f'{"ratio":>10}  ok')
  for r in rows:
    print(f'{r.label:<36} {_fmt(r.reference):>12} {_fmt(r.computed):>12} '
          f'{_fmt(r.ratio):>10}  {"yes" if r.ok else "NO"}')
  _emit_table(args, _metadata(args), ('reference', 'computed', 'ok'),
              [(r.reference, r.computed, float(r.ok)) for r in rows])
  return EXIT_OK if all(r.ok for r in rows) else EXIT_TOLERANCE


# parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
  common = argparse.ArgumentParser(add_help=False)
  common.add_argument('--threads', type=_positive_int, default=None,
                      help=f'worker threads (default: ${_pool.ENV_THREADS} '
                      'or 1)')
  common.add_argument('--output', default=None, help='artifact path')
  common.add_argument('--format', choices=('csv', 'json'), default='csv')

  parser = argparse.ArgumentParser(
      prog='mixfdp', description='Trade-off accounting for mixtures.')
  parser.add_argument('--version', action='version',
                      version=mixfdp.__version__)
  sub = parser.add_subparsers(dest='command', required=True)

  sh = sub.add_parser('shuffle', parents=[common],
                      help='shuffled randomized response')
  sh.add_argument('sub', choices=('curve', 'delta', 'epsilon'))
  sh.add_argument('--n', type=_positive_int, required=True)
  sh.add_argument('--eps0', type=float, required=True)
  sh.add_argument('--eps', type=float)
  sh.add_argument('--delta', type=float)
  sh.add_argument('--grid', type=_positive_int,
                  help='K thresholds (default: every knot)')
  sh.add_argument('--tau', type=float, default=1e-15,
                  help='binomial truncation mass')
  sh.add_argument('--slope-rule', choices=('exact', 'corollary'),
                  default='exact')
  sh.set_defaults(func=cmd_shuffle)

  dg = sub.add_parser('dpgd', parents=[common],
                      help='one-step DP-GD with random initialization')
  dg.add_argument('sub', choices=('curve', 'compare'))
  dg.add_argument('--model', choices=('clip', 'noclip', 'logistic'),
                  default='clip')
  dg.add_argument('--a', type=float, default=1.0)
  dg.add_argument('--c', type=float)
  dg.add_argument('--sigma', type=float, default=1.0)
  dg.add_argument('--M', type=float, default=1.0)
  dg.add_argument('--points', type=_positive_int, default=201)
  dg.add_argument('--tol', type=float, default=1e-9)
  dg.set_defaults(func=cmd_dpgd)

  orc = sub.add_parser('oracle', parents=[common],
                       help='exact enumeration of the shuffle pair')
  orc.add_argument('--n', type=_positive_int, required=True)
  orc.add_argument('--eps0', type=float, required=True)
  orc.add_argument('--base', action='store_true',
                   help='use the base pair (P0, Q0)')
  orc.add_argument('--exact-tradeoff', action='store_true')
  orc.add_argument('--gamma', type=float)
  orc.add_argument('--delta', type=float)
  orc.add_argument('--monte-carlo', action='store_true')
  orc.add_argument('--draws', type=_positive_int, default=100000)
  orc.add_argument('--seed', type=int, default=0)
  orc.add_argument('--timing', action='store_true',
                   help='record runtime_ms (output is then not reproducible)')
  orc.set_defaults(func=cmd_oracle)

  rep = sub.add_parser('reproduce', parents=[common],
                       help='side-by-side reproduction report')
  rep.add_argument('table', choices=tuple(REPRODUCE))
  rep.set_defaults(func=cmd_reproduce)
  return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
  parser = build_parser()
  try:
    args = parser.parse_args(argv)
  except SystemExit as exc:
    return int(exc.code or 0)
  try:
    return args.func(args)
  except shuffle.NonConvergence as exc:
    print(f'error: {exc}', file=sys.stderr)
    return EXIT_NONCONVERGENCE
  except (ValueError, OverflowError) as exc:
    print(f'error: {exc}', file=sys.stderr)
    return EXIT_INPUT


if __name__ == '__main__':
  sys.exit(main())
