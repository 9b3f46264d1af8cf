"""Exception hierarchy.

Several of these are answers rather than failures (``Diverged`` says the
moment generating function is infinite at the requested point), so each one
carries the data a caller needs to act on it.
"""


class HawkesBoundError(Exception):
    """Base class for all package errors."""


class SubcriticalityViolated(HawkesBoundError):
    def __init__(self, spr, limit):
        self.spr = spr
        self.limit = limit
        super().__init__(f"spectral radius {spr:.12g} is not below {limit:.12g}")


class NonConvergence(HawkesBoundError):
    def __init__(self, lo, hi, iterations):
        self.lo = lo
        self.hi = hi
        self.iterations = iterations
        super().__init__(
            f"Collatz-Wielandt bracket [{lo:.12g}, {hi:.12g}] did not close "
            f"after {iterations} iterations"
        )


class HorizonExceeded(HawkesBoundError):
    def __init__(self, r, n_cap):
        self.r = r
        self.n_cap = n_cap
        super().__init__(
            f"no N <= {n_cap} with |||H^N||| <= r^N for r={r:.12g}; "
            "raise r or n_cap"
        )


class OutOfRange(HawkesBoundError, ValueError):
    """An argument lies outside the range where a bound or formula is claimed."""


class NodeCapExceeded(HawkesBoundError):
    """A sampled tree or window grew past its node cap.

    ``partial`` holds whatever was built before the cap was hit (a tree for
    single samples, ``None`` for batched simulation) and ``replicate`` the
    global replicate index when known.
    """

    def __init__(self, cap, partial=None, replicate=None):
        self.cap = cap
        self.partial = partial
        self.replicate = replicate
        where = "" if replicate is None else f" in replicate {replicate}"
        super().__init__(f"node cap {cap} exceeded{where}")


class RateCapExceeded(HawkesBoundError):
    def __init__(self, rate, cap, replicate=None):
        self.rate = rate
        self.cap = cap
        self.replicate = replicate
        where = "" if replicate is None else f" in replicate {replicate}"
        super().__init__(f"dominating intensity {rate:.6g} exceeds ceiling {cap:.6g}{where}")


class Diverged(HawkesBoundError):
    """The log-MGF recursion crossed the overflow guard: the MGF is infinite."""

    def __init__(self, at_generation, t):
        self.at_generation = at_generation
        self.t = t
        super().__init__(f"log-MGF recursion diverged at generation {at_generation} (t={t:.12g})")


class InsufficientSamples(HawkesBoundError, ValueError):
    def __init__(self, n, required):
        self.n = n
        self.required = required
        super().__init__(f"{n} replicate values given, at least {required} required")
