"""Deterministic chunked thread map.

Work is always cut into the same chunks regardless of the thread count,
and results are reassembled in chunk order, so outputs are bit-identical
for any number of workers.
"""

import concurrent.futures
import os
from typing import Callable, List, Optional, Sequence, TypeVar

T = TypeVar('T')
R = TypeVar('R')

ENV_THREADS = 'FDP_THREADS'


def default_threads() -> int:
  raw = os.environ.get(ENV_THREADS, '')
  try:
    return max(1, int(raw))
  except ValueError:
    return 1


def ordered_map(fn: Callable[[T], R], chunks: Sequence[T],
                threads: Optional[int] = None) -> List[R]:
  threads = default_threads() if threads is None else max(1, int(threads))
  if threads == 1 or len(chunks) <= 1:
    return [fn(c) for c in chunks]
  with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
    return list(ex.map(fn, chunks))
