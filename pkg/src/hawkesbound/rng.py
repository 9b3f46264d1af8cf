"""Seed splitting.

Every random stream is ``SeedSequence(master_seed, spawn_key=(stream, index))``.
``stream`` separates unrelated consumers of one master seed (window
simulation, burn-in probes, bootstrap), ``index`` is the chunk number for
replicate batches. Replicates are always grouped into chunks of
``CHUNK_SIZE`` consecutive indices, so chunk ``c`` covers replicates
``c*CHUNK_SIZE ... (c+1)*CHUNK_SIZE - 1`` whatever the worker count, and the
chunks are reduced in index order. Output is therefore a function of the
master seed alone.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK_SIZE = 2048

STREAM_SIMULATE = 0
STREAM_BURN_IN = 1
STREAM_BOOTSTRAP = 2
STREAM_THINNING = 3
STREAM_TREES = 4


def generator(seed, stream=0, index=0):
    """Return the generator for ``(stream, index)`` under master ``seed``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(stream, index)))


def chunks(n):
    """Yield ``(chunk_index, start, stop)`` covering ``range(n)``."""
    for c, start in enumerate(range(0, n, CHUNK_SIZE)):
        yield c, start, min(start + CHUNK_SIZE, n)


def map_chunks(fn, n, threads=1):
    """Apply ``fn(chunk_index, start, stop)`` to every chunk, results in chunk order."""
    spans = list(chunks(n))
    if threads <= 1 or len(spans) <= 1:
        return [fn(*span) for span in spans]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda span: fn(*span), spans))
