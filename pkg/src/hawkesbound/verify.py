"""Closed-form exponential-moment bounds and their Monte Carlo verification.

For ``H in GE(r, K)`` and a window of length ``L``::

    E exp(u xi N(B)) <= exp([((1+r)/(2r))**u - 1] L sum(mu)),   0 <= u <= 1,

with ``xi = xi_{r,K}``; equivalently ``E exp(t N(B)) <= exp([exp(t C) - 1] L sum(mu))``
for ``0 <= t <= xi``. The functional form replaces ``L`` by a period ``T``
and ``t`` by ``xi * |f|``, where ``|f|`` is the sup of the ``T``-periodized
sum of ``f``.
"""

from dataclasses import dataclass, field
import csv
import io
import json
import math

import numpy as np
from scipy.stats import norm

from hawkesbound import rng as rngmod
from hawkesbound.clustersim import burn_in_check, choose_burn_in, simulate_windows
from hawkesbound.errors import InsufficientSamples, OutOfRange
from hawkesbound.model import expected_count
from hawkesbound.spectral import bound_constants, optimize_xi
from hawkesbound.thinning import simulate_thinning_windows

MIN_SAMPLES = 100
N_BOOTSTRAP = 2000
PASS, INCONCLUSIVE, FAIL = "PASS", "INCONCLUSIVE", "FAIL"


class PiecewiseFn:
    """Nonnegative step function, ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``, zero elsewhere."""

    def __init__(self, breakpoints, values):
        bp = np.asarray(breakpoints, dtype=float)
        vals = np.asarray(values, dtype=float)
        if bp.ndim != 1 or vals.ndim != 1 or bp.size != vals.size + 1 or vals.size < 1:
            raise ValueError("need len(breakpoints) == len(values) + 1 >= 2")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)) or not np.all(np.isfinite(bp)):
            raise ValueError("values must be finite and nonnegative")
        self.breakpoints = bp
        self.values = vals

    @classmethod
    def indicator(cls, a, b):
        return cls([a, b], [1.0])

    @property
    def support(self):
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (i >= 0) & (i < self.values.size)
        return np.where(inside, self.values[np.clip(i, 0, self.values.size - 1)], 0.0)

    def to_dict(self):
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}


def f_fold_norm(f, t_period):
    """``sup_t sum_n f(t + n T)``, exact for a compactly supported step function.

    The folded function is constant between consecutive breakpoints reduced
    modulo ``T``, so evaluating it at the midpoint of each folded piece gives
    every value it takes.
    """
    if t_period <= 0:
        raise ValueError("t_period must be positive")
    lo, hi = f.support
    cuts = np.unique(np.concatenate([np.mod(f.breakpoints - lo, t_period), [0.0, t_period]]))
    mids = lo + 0.5 * (cuts[:-1] + cuts[1:])
    n_max = int(math.ceil((hi - lo) / t_period)) + 1
    shifts = np.arange(0, n_max + 1) * t_period
    folded = f(mids[:, None] + shifts[None, :]).sum(axis=1)
    return float(folded.max())


def _total_rate(model):
    return float(model.mu.sum())


def _exp(x):
    # bounds far past the double range are reported as inf
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def theorem_bound_rewritten(model, l, t, cert):
    """``exp([exp(t C) - 1] L sum(mu))`` for ``0 <= t <= xi_{r,K}``."""
    consts = bound_constants(cert)
    if t < 0 or t > consts.xi * (1 + 1e-12):
        raise OutOfRange(f"t={t} outside [0, {consts.xi}]")
    return _exp(math.expm1(t * consts.c) * l * _total_rate(model))


def theorem_bound(model, l, u, cert):
    """``exp([((1+r)/(2r))**u - 1] L sum(mu))`` for ``u`` in ``[0, 1]``.

    Cross-checked against :func:`theorem_bound_rewritten` at ``t = u xi``.
    """
    if not 0 <= u <= 1:
        raise OutOfRange(f"u={u} outside [0, 1]")
    if l <= 0:
        raise ValueError("window length must be positive")
    r = cert.r
    value = _exp((((1 + r) / (2 * r)) ** u - 1) * l * _total_rate(model))
    other = theorem_bound_rewritten(model, l, u * bound_constants(cert).xi, cert)
    if not math.isclose(value, other, rel_tol=1e-10):
        raise ArithmeticError(f"bound forms disagree: {value!r} vs {other!r}")
    return value


def functional_bound(model, f, t_period, xi, cert):
    """``exp([exp(xi |f| C) - 1] T sum(mu))`` for ``0 <= xi <= xi_{r,K} / |f|``."""
    consts = bound_constants(cert)
    fold = f_fold_norm(f, t_period)
    if xi < 0 or (fold > 0 and xi * fold > consts.xi * (1 + 1e-12)):
        raise OutOfRange(f"xi={xi} outside [0, xi_rK/|f| = {consts.xi / fold if fold else math.inf}]")
    return _exp(math.expm1(xi * fold * consts.c) * t_period * _total_rate(model))


@dataclass(frozen=True)
class MgfEstimate:
    point: float
    ci_lo: float
    ci_hi: float
    n: int
    method: str
    xi: float
    heavy_tail: bool = False

    def as_dict(self):
        return {"point": self.point, "ci_lo": self.ci_lo, "ci_hi": self.ci_hi, "n": self.n,
                "method": self.method}


def estimate_mgf(values, xi, ci_level=0.99, xi_limit=None, rng_seed=0, n_boot=N_BOOTSTRAP):
    """Monte Carlo estimate of ``E exp(xi X)`` with a confidence interval.

    The normal-approximation interval needs ``E exp(2 xi X)`` finite. It is
    used only when ``2 xi <= xi_limit``, the largest exponent at which the
    moment is certified; otherwise (including ``xi_limit=None``) a
    percentile bootstrap with ``n_boot`` resamples is returned and
    ``heavy_tail`` is set.

    Raises
    ------
    InsufficientSamples
        For fewer than 100 values.
    """
    x = np.asarray(values, dtype=float)
    if x.size < MIN_SAMPLES:
        raise InsufficientSamples(x.size, MIN_SAMPLES)
    if xi < 0:
        raise ValueError("xi must be nonnegative")
    if xi == 0:
        return MgfEstimate(1.0, 1.0, 1.0, x.size, "clt", 0.0)
    y = np.exp(xi * x)
    point = float(y.mean())
    if xi_limit is not None and 2 * xi <= xi_limit:
        half = norm.ppf(0.5 + ci_level / 2) * float(y.std(ddof=1)) / math.sqrt(x.size)
        return MgfEstimate(point, point - half, point + half, x.size, "clt", float(xi))

    rng = rngmod.generator(rng_seed, rngmod.STREAM_BOOTSTRAP)
    uniq, counts = np.unique(x, return_counts=True)
    if uniq.size <= 4096:
        # resampling with replacement = multinomial counts over the distinct values
        draws = rng.multinomial(x.size, counts / x.size, size=n_boot)
        means = draws @ np.exp(xi * uniq) / x.size
    else:
        means = np.array([y[rng.integers(0, x.size, x.size)].mean() for _ in range(n_boot)])
    lo, hi = np.quantile(means, [0.5 - ci_level / 2, 0.5 + ci_level / 2])
    return MgfEstimate(point, min(float(lo), point), max(float(hi), point), x.size, "bootstrap",
                       float(xi), heavy_tail=True)


def verdict(ci_lo, ci_hi, bound):
    """PASS when the whole interval is below the bound, FAIL when it is above, else INCONCLUSIVE."""
    if ci_hi <= bound:
        return PASS
    if ci_lo > bound:
        return FAIL
    return INCONCLUSIVE


@dataclass
class GridPoint:
    u: float
    xi: float
    bound: float
    mgf: MgfEstimate
    verdict: str

    def as_dict(self):
        return {"u": self.u, "xi": self.xi, "bound": self.bound, "mgf": self.mgf.as_dict(),
                "verdict": self.verdict}


@dataclass
class BoundReport:
    model: dict
    cert: object
    grid: list
    seed: int
    engine: str
    burn_in: float
    burn_in_check_value: float
    window: tuple
    n_reps: int
    ci_level: float
    burn_in_passed: bool
    mean_statistic: float
    se_statistic: float
    f: dict = None
    t_period: float = None
    extra: dict = field(default_factory=dict)

    @property
    def verdicts(self):
        return [p.verdict for p in self.grid]

    @property
    def conclusive(self):
        return self.burn_in_passed

    def to_dict(self):
        out = {
            "model": self.model,
            "cert": self.cert.as_dict(),
            "grid": [p.as_dict() for p in self.grid],
            "seed": self.seed,
            "engine": self.engine,
            "burn_in": self.burn_in,
            "burn_in_check_value": self.burn_in_check_value,
            "window": list(self.window),
            "n_reps": self.n_reps,
            "ci_level": self.ci_level,
            "burn_in_passed": self.burn_in_passed,
            "mean_statistic": self.mean_statistic,
            "se_statistic": self.se_statistic,
        }
        if self.f is not None:
            out["f"] = self.f
            out["t_period"] = self.t_period
        out.update(self.extra)
        return out

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is None:
            return text
        with open(path, "w") as fh:
            fh.write(text + "\n")
        return None

    def to_csv(self, path=None):
        """One row per grid point."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["u", "xi", "bound", "point", "ci_lo", "ci_hi", "n", "method", "verdict"])
        for p in self.grid:
            writer.writerow([repr(p.u), repr(p.xi), repr(p.bound), repr(p.mgf.point), repr(p.mgf.ci_lo),
                             repr(p.mgf.ci_hi), p.mgf.n, p.mgf.method, p.verdict])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


def simulate(model, a, b, burn_in, n_reps, engine, rng_seed, threads=1):
    """Dispatch to the cluster or thinning simulator."""
    if engine == "cluster":
        return simulate_windows(model, a, b, burn_in, n_reps, rng_seed, threads=threads)
    if engine == "thinning":
        return simulate_thinning_windows(model, a, b, burn_in, n_reps, rng_seed, threads=threads)
    raise ValueError(f"unknown engine {engine!r}")


def run_verification(model, window, u_grid, n_reps, burn_in=None, engine="cluster", rng_seed=0, cert=None,
                     ci_level=0.99, f=None, t_period=None, threads=1, burn_in_eps=1e-3, n_probe=100_000):
    """Simulate ``n_reps`` windows and compare empirical MGFs with the bound at each ``u``.

    Without ``f`` the statistic is ``N([a, b))`` and the bound is
    :func:`theorem_bound` with ``L = b - a`` at ``xi = u xi_{r,K}``. With ``f``
    (a :class:`PiecewiseFn`) and ``t_period``, the statistic is ``N(f)`` and
    the bound :func:`functional_bound` at ``xi = u xi_{r,K} / |f|``.

    ``burn_in=None`` picks one with :func:`choose_burn_in`; a given burn-in is
    probed once with :func:`burn_in_check`. Either way the report records
    whether the check passed at ``burn_in_eps`` times the mean window count.
    ``cert=None`` uses :func:`optimize_xi`.
    """
    a, b = float(window[0]), float(window[1])
    if n_reps < MIN_SAMPLES:
        raise InsufficientSamples(n_reps, MIN_SAMPLES)
    if cert is None:
        cert = optimize_xi(model.interaction_matrix()).cert
    consts = bound_constants(cert)
    if burn_in is None:
        burn_in, check, passed = choose_burn_in(model, a, b, burn_in_eps, n_probe=n_probe, rng_seed=rng_seed)
    else:
        check = burn_in_check(model, a, b, burn_in, n_probe, rng_seed)
        passed = check < burn_in_eps * expected_count(model, b - a) or check == 0.0

    batch = simulate(model, a, b, burn_in, n_reps, engine, rng_seed, threads)
    if f is None:
        stat = batch.counts().astype(float)
        fold = 1.0
    else:
        if t_period is None:
            raise ValueError("functional verification needs t_period")
        stat = batch.apply(f)
        fold = f_fold_norm(f, t_period)

    grid = []
    for u in u_grid:
        if f is None:
            xi = u * consts.xi
            bound = theorem_bound(model, b - a, u, cert)
        else:
            xi = u * consts.xi / fold if fold > 0 else 0.0
            bound = functional_bound(model, f, t_period, xi, cert)
        est = estimate_mgf(stat, xi, ci_level, xi_limit=consts.xi / fold if fold > 0 else math.inf,
                           rng_seed=rng_seed)
        grid.append(GridPoint(float(u), float(xi), bound, est, verdict(est.ci_lo, est.ci_hi, bound)))

    return BoundReport(
        model=model.to_dict(), cert=cert, grid=grid, seed=rng_seed, engine=engine, burn_in=float(burn_in),
        burn_in_check_value=float(check), window=(a, b), n_reps=int(n_reps), ci_level=ci_level,
        burn_in_passed=bool(passed), mean_statistic=float(stat.mean()),
        se_statistic=float(stat.std(ddof=1) / math.sqrt(stat.size)) if stat.size > 1 else math.nan,
        f=None if f is None else f.to_dict(), t_period=t_period,
    )


def window_sums(cluster_ids, offsets, n_clusters, s, l, xi):
    """Per-cluster ``sum_n (exp(xi G([s+nL, s+(n+1)L))) - 1)`` and ``exp(xi G([0, inf))) - 1``.

    ``offsets`` are birth dates of clusters rooted at 0 (so all ``>= 0``) and
    ``s`` lies in ``[-L, 0)``; the windows tile ``[s, inf)``.
    """
    if not -l <= s < 0:
        raise ValueError("s must lie in [-L, 0)")
    cluster_ids = np.asarray(cluster_ids, dtype=np.int64)
    slot = np.floor((np.asarray(offsets) - s) / l).astype(np.int64)
    keys, counts = np.unique(np.stack([cluster_ids, slot]), axis=1, return_counts=True)
    windowed = np.bincount(keys[0], weights=np.expm1(xi * counts), minlength=n_clusters)
    sizes = np.bincount(cluster_ids, minlength=n_clusters)
    return windowed, np.expm1(xi * sizes)
