"""Ogata thinning straight from the conditional intensity.

``lambda_m(t) = mu_m + sum over past points (s, k) of kernels[k][m](t - s)``.

Every kernel family shipped is nonincreasing, so between points the total
intensity can only fall: its value just after the latest candidate or
accepted point dominates it until the next one. A candidate is drawn from
that constant rate, accepted with probability ``lambda(w) / bound`` and typed
proportionally to ``lambda_m(w)``. The bound is then reset to ``lambda(w+)``,
which adds ``h(0+)`` of the new point's kernels after an acceptance.

Replicates run in lockstep: each loop iteration advances every live
replicate by one candidate, with histories kept in padded arrays.
"""

import numpy as np

from hawkesbound import rng as rngmod
from hawkesbound.errors import NodeCapExceeded, RateCapExceeded
from hawkesbound.events import WindowBatch

DEFAULT_RATE_CAP = 1e6
DEFAULT_MAX_EVENTS = 1_000_000
TRUNCATION_TOL = 1e-12


def _check_model(model):
    for row in model.kernels:
        for k in row:
            if k.family not in ("null", "exponential", "uniform", "pareto"):
                raise ValueError(f"thinning needs nonincreasing kernels, got {k.family}")


def _intensity(model, lags, w, hist_t, hist_k, n_hist):
    """Per-type intensity at ``w`` (shape ``(n, M)``) from padded histories."""
    n = w.size
    lam = np.tile(model.mu, (n, 1))
    width = int(n_hist.max()) if n else 0
    if width == 0:
        return lam
    dt = w[:, None] - hist_t[:, :width]
    valid = np.arange(width)[None, :] < n_hist[:, None]
    ks = hist_k[:, :width]
    for src in range(model.m):
        from_src = valid & (ks == src)
        if not from_src.any():
            continue
        for tgt in range(model.m):
            kernel = model.kernels[src][tgt]
            if kernel.a == 0:
                continue
            mask = from_src & (dt <= lags[src][tgt])
            lam[:, tgt] += np.where(mask, kernel.value(np.where(mask, dt, 1.0)), 0.0).sum(axis=1)
    return lam


def _thinning_chunk(model, a, b, burn_in, n, rng, rate_cap, max_events):
    m = model.m
    lags = [[k.truncation_lag(TRUNCATION_TOL) for k in row] for row in model.kernels]
    jump = np.array([sum(k.sup() for k in row) for row in model.kernels])
    mu_total = float(model.mu.sum())

    t = np.full(n, a - burn_in, dtype=float)
    bound = np.full(n, mu_total)
    cap = 64
    hist_t = np.empty((n, cap))
    hist_k = np.zeros((n, cap), dtype=np.int64)
    n_hist = np.zeros(n, dtype=np.int64)
    live = np.flatnonzero(bound > 0)
    out_rep, out_t, out_k = [], [], []

    while live.size:
        w = t[live] + rng.standard_exponential(live.size) / bound[live]
        inside = w < b
        live, w = live[inside], w[inside]
        if not live.size:
            break
        lam = _intensity(model, lags, w, hist_t[live], hist_k[live], n_hist[live])
        total = lam.sum(axis=1)
        assert np.all(total <= bound[live] * (1 + 1e-9) + 1e-12), "dominating rate under-majorizes"
        accept = rng.random(live.size) * bound[live] < total
        u = rng.random(live.size)

        acc = live[accept]
        if acc.size:
            cum = np.cumsum(lam[accept], axis=1)
            types = (cum < (u[accept] * total[accept])[:, None]).sum(axis=1)
            types = np.minimum(types, m - 1)
            if int(n_hist[acc].max()) + 1 > cap:
                grow = cap
                hist_t = np.concatenate([hist_t, np.empty((n, grow))], axis=1)
                hist_k = np.concatenate([hist_k, np.zeros((n, grow), dtype=np.int64)], axis=1)
                cap += grow
            w_acc = w[accept]
            hist_t[acc, n_hist[acc]] = w_acc
            hist_k[acc, n_hist[acc]] = types
            n_hist[acc] += 1
            if n_hist[acc].max() > max_events:
                raise NodeCapExceeded(max_events, replicate=int(acc[np.argmax(n_hist[acc] > max_events)]))
            keep = w_acc >= a
            out_rep.append(acc[keep])
            out_t.append(w_acc[keep])
            out_k.append(types[keep])
            bound[acc] = total[accept] + jump[types]
        rej = live[~accept]
        bound[rej] = total[~accept]
        t[live] = w
        if bound[live].max() > rate_cap:
            bad = live[np.argmax(bound[live] > rate_cap)]
            raise RateCapExceeded(float(bound[bad]), rate_cap, replicate=int(bad))
        live = live[bound[live] > 0]

    if not out_rep:
        return WindowBatch([], [], [], (a, b), n)
    reps = np.concatenate(out_rep)
    times = np.concatenate(out_t)
    types = np.concatenate(out_k) + 1
    order = np.lexsort((times, reps))
    return WindowBatch(reps[order], times[order], types[order], (a, b), n)


def simulate_thinning_windows(model, a, b, burn_in, n_reps, rng_seed, rate_cap=DEFAULT_RATE_CAP,
                              max_events=DEFAULT_MAX_EVENTS, threads=1):
    """Simulate ``n_reps`` windows ``[a, b)`` by thinning, starting empty at ``a - burn_in``.

    Raises
    ------
    RateCapExceeded
        If a dominating rate passes ``rate_cap``.
    NodeCapExceeded
        If a replicate accumulates more than ``max_events`` points.
    """
    if not a < b:
        raise ValueError("need a < b")
    if burn_in < 0:
        raise ValueError("burn_in must be nonnegative")
    _check_model(model)

    def run(c, start, stop):
        rng = rngmod.generator(rng_seed, rngmod.STREAM_THINNING, c)
        try:
            return _thinning_chunk(model, a, b, burn_in, stop - start, rng, rate_cap, max_events)
        except RateCapExceeded as exc:
            raise RateCapExceeded(exc.rate, exc.cap, replicate=start + exc.replicate) from exc
        except NodeCapExceeded as exc:
            raise NodeCapExceeded(exc.cap, replicate=start + exc.replicate) from exc

    return WindowBatch.concat(rngmod.map_chunks(run, n_reps, threads), (a, b))


def simulate_thinning(model, a, b, burn_in, rng_seed, rate_cap=DEFAULT_RATE_CAP, max_events=DEFAULT_MAX_EVENTS):
    """One window ``[a, b)`` simulated by thinning."""
    return simulate_thinning_windows(model, a, b, burn_in, 1, rng_seed, rate_cap, max_events)[0]
