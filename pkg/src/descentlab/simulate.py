"""Vectorized chain replicas on per-replica SplitMix64 streams.

Replica i always consumes stream ``derive_state(seed, i)``, one uniform per
step, exactly as ``descent_chain.sample_final`` does, so results do not
depend on how replicas are chunked or how many threads run the chunks.
"""

from __future__ import annotations

import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DomainError
from .rng import StreamBatch

CHUNK = 4096


def default_threads() -> int:
    env = os.environ.get("DESCENTLAB_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise DomainError(f"DESCENTLAB_THREADS={env!r} is not an integer") from None
        if value < 1:
            raise DomainError("DESCENTLAB_THREADS must be >= 1")
        return value
    return 1


def _run_chunk(seed: int, start: int, count: int, n_final: int,
               record: Sequence[int]) -> np.ndarray:
    """Returns an array (len(record), 2, count) of (D, D') at each recorded size."""
    batch = StreamBatch(seed, start, count)
    d = np.zeros(count, dtype=np.int64)
    dp = np.zeros(count, dtype=np.int64)
    out = np.empty((len(record), 2, count), dtype=np.int64)
    slots = {m: i for i, m in enumerate(record)}
    if 1 in slots:
        out[slots[1]] = 0
    for m in range(1, n_final):
        r = (batch.uniform() * float((m + 1) * (m + 1))).astype(np.int64)
        c11 = (m - d) * (m - dp) + m
        c10 = c11 + (m - d) * (dp + 1) - m
        c01 = c10 + (d + 1) * (m - dp) - m
        inc_d = r < c10
        inc_dp = (r < c11) | ((r >= c10) & (r < c01))
        d += inc_d
        dp += inc_dp
        if m + 1 in slots:
            out[slots[m + 1], 0] = d
            out[slots[m + 1], 1] = dp
    return out


def simulate_states(n_final: int, reps: int, seed: int, record: Sequence[int] | None = None,
                    threads: int | None = None) -> np.ndarray:
    """(D, D') of ``reps`` independent chains at each size in ``record``.

    Returns an int array of shape (len(record), 2, reps); ``record``
    defaults to ``[n_final]``.
    """
    if n_final < 1 or reps < 1:
        raise DomainError("n_final and reps must be >= 1")
    record = [n_final] if record is None else list(record)
    if any(not (1 <= m <= n_final) for m in record):
        raise DomainError("recorded sizes must lie in [1, n_final]")
    threads = default_threads() if threads is None else threads
    starts = list(range(0, reps, CHUNK))

    def job(start: int) -> np.ndarray:
        return _run_chunk(seed, start, min(CHUNK, reps - start), n_final, record)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(s) for s in starts]
    return np.concatenate(parts, axis=2)
