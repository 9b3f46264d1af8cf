"""Hawkes simulation through the cluster (immigrant-branching) representation.

Immigrants of type ``m`` arrive as a homogeneous Poisson process of rate
``mu[m]``; each one roots a Galton-Watson tree with offspring matrix ``H``
whose birth-date gaps follow the normalized kernels. The union of all birth
dates, with types, is the Hawkes process. A window ``[a, b)`` is simulated from
immigrants on ``[a - burn_in, b)``; immigrants older than that are dropped,
which can only remove points, so simulated counts are stochastically below
stationary ones. :func:`burn_in_check` measures the size of that deficit.
"""

from dataclasses import dataclass

import numpy as np

from hawkesbound import rng as rngmod
from hawkesbound.errors import NodeCapExceeded
from hawkesbound.events import EventSequence, WindowBatch
from hawkesbound.gwtree import DEFAULT_MAX_NODES, grow_forest, ulam_harris_labels
from hawkesbound.model import expected_count


@dataclass(frozen=True)
class Cluster:
    """One cluster: ``points[i] = (label, type, birth)`` in breadth-first order."""

    points: tuple

    def __len__(self):
        return len(self.points)

    @property
    def births(self):
        return np.array([p[2] for p in self.points])

    @property
    def types(self):
        return [p[1] for p in self.points]

    @property
    def labels(self):
        return [p[0] for p in self.points]


def sample_cluster(model, root_type, t0, rng_seed, max_nodes=DEFAULT_MAX_NODES):
    """Sample the cluster of a (1-based) ``root_type`` point born at ``t0``.

    Births are built as offsets from the root and ``t0`` is added last, so the
    same seed gives the same cluster translated exactly by ``t0``.
    """
    if not 1 <= root_type <= model.m:
        raise ValueError(f"root_type must lie in [1, {model.m}]")
    rng = rngmod.generator(rng_seed, rngmod.STREAM_TREES)
    forest = grow_forest(model.interaction_matrix(), [root_type - 1], rng, max_nodes,
                         increments=model.samplers(), truncate=True)
    labels = ulam_harris_labels(forest.parent)
    births = forest.offset + t0
    cluster = Cluster(tuple(zip(labels, (int(t) + 1 for t in forest.type), births.tolist())))
    if forest.truncated:
        raise NodeCapExceeded(max_nodes, partial=cluster)
    return cluster


def sample_cluster_offsets(model, root_types, rng_seed, max_nodes=DEFAULT_MAX_NODES, threads=1):
    """Birth offsets of many independent clusters rooted at time 0.

    Returns ``(cluster_index, offsets)`` flat arrays; ``root_types`` are 1-based.
    """
    root_types = np.asarray(root_types, dtype=np.int64) - 1
    samplers = model.samplers()
    h = model.interaction_matrix()

    def run(c, start, stop):
        rng = rngmod.generator(rng_seed, rngmod.STREAM_TREES, c)
        try:
            forest = grow_forest(h, root_types[start:stop], rng, max_nodes, increments=samplers)
        except NodeCapExceeded as exc:
            raise NodeCapExceeded(max_nodes, replicate=start + exc.replicate) from exc
        return forest.tree + start, forest.offset

    parts = rngmod.map_chunks(run, root_types.size, threads)
    if not parts:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def cluster_count(cluster, a, b):
    """Number of births in ``[a, b)``, all types."""
    if a > b:
        raise ValueError("need a <= b")
    births = cluster.births
    return int(np.count_nonzero((births >= a) & (births < b)))


def _simulate_chunk(model, a, b, burn_in, n, rng, max_nodes):
    start = a - burn_in
    span = b - start
    rep, root_type, root_time = [], [], []
    for m, mu in enumerate(model.mu):
        if mu == 0:
            continue
        k = rng.poisson(mu * span, size=n)
        rep.append(np.repeat(np.arange(n), k))
        root_type.append(np.full(k.sum(), m))
        root_time.append(start + span * rng.random(k.sum()))
    if not rep:
        return WindowBatch([], [], [], (a, b), n)
    rep = np.concatenate(rep)
    root_type = np.concatenate(root_type)
    root_time = np.concatenate(root_time)

    forest = grow_forest(
        model.interaction_matrix(), root_type, rng, max_nodes,
        increments=model.samplers(),
        prune=lambda tree, off: root_time[tree] + off < b,
        groups=rep,
    )
    times = root_time[forest.tree] + forest.offset
    reps = rep[forest.tree]
    inside = (times >= a) & (times < b)
    times, reps, types = times[inside], reps[inside], forest.type[inside] + 1
    order = np.lexsort((times, reps))
    return WindowBatch(reps[order], times[order], types[order], (a, b), n)


def simulate_windows(model, a, b, burn_in, n_reps, rng_seed, max_nodes=DEFAULT_MAX_NODES, threads=1):
    """Simulate ``n_reps`` independent windows ``[a, b)``.

    Replicates are generated in fixed-size chunks with one derived stream per
    chunk (see :mod:`hawkesbound.rng`), so the result depends on the seed only.
    ``max_nodes`` caps the points kept per replicate.

    Raises
    ------
    NodeCapExceeded
        With the global replicate index.
    """
    if not a < b:
        raise ValueError("need a < b")
    if burn_in <= 0:
        raise ValueError("burn_in must be positive")

    def run(c, start, stop):
        rng = rngmod.generator(rng_seed, rngmod.STREAM_SIMULATE, c)
        try:
            return _simulate_chunk(model, a, b, burn_in, stop - start, rng, max_nodes)
        except NodeCapExceeded as exc:
            raise NodeCapExceeded(max_nodes, replicate=start + exc.replicate) from exc

    return WindowBatch.concat(rngmod.map_chunks(run, n_reps, threads), (a, b))


def simulate_window(model, a, b, burn_in, rng_seed, max_nodes=DEFAULT_MAX_NODES):
    """One window ``[a, b)``; replicate 0 of :func:`simulate_windows` with one replicate."""
    return simulate_windows(model, a, b, burn_in, 1, rng_seed, max_nodes)[0]


def burn_in_check(model, a, b, burn_in, n_probe=100_000, rng_seed=0, max_nodes=DEFAULT_MAX_NODES):
    """Estimate the mean number of points in ``[a, b)`` from immigrants in ``[a - 2B, a - B)``.

    Immigrants of type ``m`` in that strip number ``mu[m] * B`` on average and
    sit uniformly in it, so the estimate is ``sum_m mu[m] * B * mean_m`` where
    ``mean_m`` averages the window count over ``n_probe`` simulated clusters.
    It approximates the mean deficit caused by stopping the immigrants at
    ``a - B`` (the strip is the first piece of what is dropped).
    """
    total = 0.0
    h = model.interaction_matrix()
    samplers = model.samplers()
    for m, mu in enumerate(model.mu):
        if mu == 0:
            continue
        rng = rngmod.generator(rng_seed, rngmod.STREAM_BURN_IN, m)
        t0 = a - 2 * burn_in + burn_in * rng.random(n_probe)
        forest = grow_forest(h, np.full(n_probe, m), rng, max_nodes, increments=samplers,
                             prune=lambda tree, off: t0[tree] + off < b)
        times = t0[forest.tree] + forest.offset
        hits = np.count_nonzero((times >= a) & (times < b))
        total += float(mu) * burn_in * hits / n_probe
    return total


def choose_burn_in(model, a, b, eps=1e-3, start=1.0, n_probe=100_000, rng_seed=0, max_doublings=24):
    """Double the burn-in from ``start`` until :func:`burn_in_check` is below ``eps`` times the mean count.

    Returns ``(burn_in, check_value, passed)``.
    """
    threshold = eps * expected_count(model, b - a)
    burn_in = float(start)
    value = burn_in_check(model, a, b, burn_in, n_probe, rng_seed)
    for _ in range(max_doublings):
        if value < threshold or value == 0.0:
            return burn_in, value, True
        burn_in *= 2
        value = burn_in_check(model, a, b, burn_in, n_probe, rng_seed)
    return burn_in, value, value < threshold or value == 0.0
