"""Matrix analysis of the interaction matrix.

Everything the exponential-moment bounds need from a Hawkes model is the
nonnegative matrix ``H`` whose entry ``[a, b]`` is the expected number of
type-``b`` children of a type-``a`` point. This module computes its spectral
radius, finds finite certificates of geometric decay of ``|||H^n|||_inf``
and turns a certificate into the bound constants.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.sparse.csgraph import connected_components

from hawkesbound.errors import HorizonExceeded, NonConvergence, SubcriticalityViolated

SPR_TOL = 1e-10
SPR_MAX_ITER = 100_000


class InteractionMatrix:
    """Nonnegative square matrix of kernel L1 norms, indexed ``[source, target]``.

    Parameters
    ----------
    entries : array_like
        ``entries[a][b]`` is ``||h^b_a||_1``, the mean number of type-``b``
        children of a type-``a`` point.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        arr = np.array(entries, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ValueError(f"interaction matrix must be square and nonempty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("interaction matrix entries must be finite and nonnegative")
        arr.setflags(write=False)
        self.entries = arr

    @property
    def m(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __eq__(self, other):
        return isinstance(other, InteractionMatrix) and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"InteractionMatrix({self.entries.tolist()!r})"

    def tolist(self):
        return self.entries.tolist()


def as_matrix(h):
    return h if isinstance(h, InteractionMatrix) else InteractionMatrix(h)


@dataclass(frozen=True)
class GeCertificate:
    """A checked pair ``(r, k)`` with ``|||H^n|||_inf <= k r^n`` for every ``n >= 1``.

    ``checked_norms[n-1]`` is ``|||H^n|||_inf`` for ``n = 1..proof_horizon``.
    The last of them is at most ``r**proof_horizon``, which extends the bound
    to all ``n`` by submultiplicativity.
    """

    r: float
    k: float
    proof_horizon: int
    checked_norms: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")
        if not (self.k >= 0.0 and math.isfinite(self.k)):
            raise ValueError(f"k must be finite and nonnegative, got {self.k}")
        if self.proof_horizon < 1:
            raise ValueError("proof_horizon must be a positive integer")
        if self.checked_norms:
            if len(self.checked_norms) != self.proof_horizon:
                raise ValueError("checked_norms must hold one norm per power up to proof_horizon")
            for n, norm in enumerate(self.checked_norms, start=1):
                if norm > self.k * self.r**n * (1 + 1e-12):
                    raise ValueError(f"|||H^{n}||| = {norm} exceeds k r^{n}")
            if self.checked_norms[-1] > self.r**self.proof_horizon:
                raise ValueError("closure condition |||H^N||| <= r^N fails")

    def as_dict(self):
        return {"r": self.r, "k": self.k, "proof_horizon": self.proof_horizon}


@dataclass(frozen=True)
class BoundConstants:
    """Exponent abscissa ``xi`` and multiplier ``c`` derived from a certificate.

    ``unbounded`` is set by :func:`optimize_xi` when ``H = 0``: then ``k = 0``
    for every ``r`` and ``xi`` grows without limit as ``r -> 0``, so the
    returned value is only the best grid point.
    """

    xi: float
    c: float
    cert: GeCertificate
    unbounded: bool = False


def operator_norm_inf(h):
    """Operator norm induced by the sup norm: the largest row sum."""
    return float(np.abs(np.asarray(as_matrix(h).entries)).sum(axis=1).max())


def power_norms(h, n):
    """Return ``[|||H^1|||, ..., |||H^n|||]`` by repeated multiplication."""
    a = as_matrix(h).entries
    out = np.empty(n)
    p = np.eye(a.shape[0])
    for i in range(n):
        p = p @ a
        out[i] = np.abs(p).sum(axis=1).max()
    return out


def _irreducible_radius(b, tol, max_iter):
    # b + s*I is primitive for irreducible b and any s > 0, with Perron root
    # rho(b) + s. Tracking s to the current upper bracket keeps the convergence
    # rate scale-free, which matters when rho(b) is far below the row sums.
    shift = float(b.sum(axis=1).max())
    x = np.ones(b.shape[0])
    lo, hi = 0.0, shift
    for it in range(1, max_iter + 1):
        bx = b @ x
        ratios = bx / x
        lo = max(lo, float(ratios.min()))
        hi = min(hi, float(ratios.max()))
        if hi - lo <= 2 * tol:
            return 0.5 * (lo + hi)
        shift = hi if hi > 0 else shift
        y = bx + shift * x
        x = y / y.max()
    raise NonConvergence(lo, hi, max_iter)


def spectral_radius(h, tol=SPR_TOL, max_iter=SPR_MAX_ITER):
    """Perron root of a nonnegative matrix, to absolute accuracy ``tol``.

    The matrix is split into strongly connected components. Each irreducible
    diagonal block is handled by shifted power iteration, with the
    Collatz-Wielandt quotients ``min_i (Bx)_i/x_i <= rho(B) <= max_i (Bx)_i/x_i``
    as a two-sided bracket; the spectral radius of ``H`` is the largest block
    value.

    Raises
    ------
    NonConvergence
        If a bracket is still wider than ``2*tol`` after ``max_iter`` steps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = as_matrix(h).entries
    n_comp, labels = connected_components(a > 0, directed=True, connection="strong")
    best = 0.0
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        block = a[np.ix_(idx, idx)]
        if not block.any():
            continue
        best = max(best, _irreducible_radius(block, tol, max_iter))
    return best


def ge_certificate(h, r, n_cap=2000, tol=SPR_TOL):
    """Find ``k`` with ``H in GE(r, k)`` together with its finite proof.

    Looks for the smallest ``N <= n_cap`` with ``|||H^N||| <= r^N`` and sets
    ``k = max_{n<=N} |||H^n||| / r^n``. Writing ``n = qN + s`` with ``0 <= s < N``,
    ``|||H^n||| <= |||H^N|||^q |||H^s||| <= k r^n``, so ``k`` holds for all ``n``.
    ``r`` equal to the spectral radius is allowed; whether it works then depends
    on the matrix (it does when ``H`` has constant row sums).

    Raises
    ------
    SubcriticalityViolated
        If the spectral radius is certainly above ``r``.
    HorizonExceeded
        If no closing power is found up to ``n_cap``.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    a = as_matrix(h).entries
    spr = spectral_radius(a, tol)
    if spr - tol > r:
        raise SubcriticalityViolated(spr, r)
    norms = []
    p = np.eye(a.shape[0])
    for n in range(1, n_cap + 1):
        p = p @ a
        norm = float(np.abs(p).sum(axis=1).max())
        norms.append(norm)
        if norm <= r**n:
            k = float(max(v / r**j for j, v in enumerate(norms, start=1)))
            return GeCertificate(r=float(r), k=k, proof_horizon=n, checked_norms=tuple(norms))
    raise HorizonExceeded(r, n_cap)


def xi_of(r, k):
    return math.log((1 + r) / (2 * r)) / (1 + 2 * k / (1 - r))


def c_of(r, k):
    return 1 + 2 * k / (1 - r)


def bound_constants(cert):
    """``xi = log((1+r)/(2r)) / c`` and ``c = 1 + 2k/(1-r)`` for a certificate."""
    return BoundConstants(xi=xi_of(cert.r, cert.k), c=c_of(cert.r, cert.k), cert=cert)


def optimize_xi(h, grid=256, n_cap=2000, tol=SPR_TOL):
    """Scan certificates over ``r`` and keep the one with the largest ``xi``.

    Candidates are ``grid`` points ``spr + (1 - spr) * w`` with ``w``
    log-spaced in ``[1e-3, 1)``, plus the Gelfand values ``|||H^n|||^(1/n)``
    below one, for which the closure holds at ``N = n`` by construction. The
    latter catch optima sitting exactly at the spectral radius, e.g. ``H``
    with constant row sums.
    """
    a = as_matrix(h).entries
    spr = spectral_radius(a, tol)
    if spr >= 1.0:
        raise SubcriticalityViolated(spr, 1.0)
    candidates = list(spr + (1.0 - spr) * np.geomspace(1e-3, 1.0, grid, endpoint=False))
    norms = power_norms(a, min(n_cap, 64))
    candidates += [v ** (1.0 / n) for n, v in enumerate(norms, start=1) if 0.0 < v ** (1.0 / n) < 1.0]
    best = None
    for r in sorted({float(c) for c in candidates}):
        if not 0.0 < r < 1.0:
            continue
        try:
            cert = ge_certificate(a, r, n_cap, tol)
        except (HorizonExceeded, SubcriticalityViolated):
            continue
        consts = bound_constants(cert)
        if best is None or consts.xi > best.xi:
            best = consts
    if best is None:
        raise HorizonExceeded(1.0, n_cap)
    if not a.any():
        best = BoundConstants(best.xi, best.c, best.cert, unbounded=True)
    return best
