"""Parametric interaction kernels and the Hawkes model built from them."""

from dataclasses import dataclass
import math

import numpy as np

from hawkesbound.errors import SubcriticalityViolated
from hawkesbound.spectral import InteractionMatrix, spectral_radius

FAMILIES = ("null", "exponential", "uniform", "pareto")
_PARAMS = {
    "null": (),
    "exponential": ("a", "rate"),
    "uniform": ("a", "width"),
    "pareto": ("a", "x_min", "shape"),
}


def open_uniform(n, rng):
    """``n`` uniforms on the open interval (0, 1), multiples of 2**-53."""
    return rng.integers(1, 2**53, size=n) * 2.0**-53


@dataclass(frozen=True)
class KernelSpec:
    """An interaction function ``h`` on ``(0, inf)`` with total mass ``a``.

    Families, all nonincreasing:

    * ``null``: ``h = 0``.
    * ``exponential``: ``a * rate * exp(-rate * s)``.
    * ``uniform``: ``a / width`` on ``(0, width]``.
    * ``pareto``: Lomax form ``a * (shape / x_min) * (1 + s / x_min) ** -(shape + 1)``,
      a Pareto law shifted onto ``(0, inf)``; finite mass needs no moment, the
      tail decays like ``s ** -(shape + 1)``.
    """

    family: str = "null"
    a: float = 0.0
    rate: float = None
    width: float = None
    x_min: float = None
    shape: float = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        for name in _PARAMS[self.family]:
            value = getattr(self, name)
            if value is None or not math.isfinite(value):
                raise ValueError(f"{self.family} kernel needs a finite {name}")
        if self.family == "null":
            if self.a != 0:
                raise ValueError("null kernel has mass 0")
            return
        if self.a < 0:
            raise ValueError("kernel mass must be nonnegative")
        for name in _PARAMS[self.family][1:]:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.family == "pareto" and self.shape <= 1:
            raise ValueError("pareto shape must exceed 1")

    @classmethod
    def null(cls):
        return cls("null")

    @classmethod
    def exponential(cls, a, rate):
        return cls("exponential", a=float(a), rate=float(rate))

    @classmethod
    def uniform(cls, a, width):
        return cls("uniform", a=float(a), width=float(width))

    @classmethod
    def pareto(cls, a, x_min, shape):
        return cls("pareto", a=float(a), x_min=float(x_min), shape=float(shape))

    def l1_norm(self):
        return self.a

    def value(self, s):
        """Kernel value ``h(s)``; zero for ``s <= 0``."""
        s = np.asarray(s, dtype=float)
        pos = s > 0
        if self.family == "null" or self.a == 0:
            out = np.zeros_like(s)
        elif self.family == "exponential":
            out = self.a * self.rate * np.exp(-self.rate * np.where(pos, s, 0.0))
        elif self.family == "uniform":
            out = np.where(s <= self.width, self.a / self.width, 0.0)
        else:
            out = self.a * (self.shape / self.x_min) * (1 + np.where(pos, s, 0.0) / self.x_min) ** -(self.shape + 1)
        return np.where(pos, out, 0.0)

    def density(self, s):
        """Normalized density ``h / ||h||_1``."""
        if self.a == 0:
            raise ValueError("kernel with zero mass has no normalized density")
        return self.value(s) / self.a

    def sup(self):
        """``h(0+)``, the largest value of the kernel."""
        if self.family == "null" or self.a == 0:
            return 0.0
        if self.family == "exponential":
            return self.a * self.rate
        if self.family == "uniform":
            return self.a / self.width
        return self.a * self.shape / self.x_min

    def tail_fraction(self, lag):
        """Fraction of the mass carried by ``(lag, inf)``."""
        if self.family == "null" or self.a == 0:
            return 0.0
        if self.family == "exponential":
            return math.exp(-self.rate * lag)
        if self.family == "uniform":
            return max(0.0, 1.0 - lag / self.width)
        return (1 + lag / self.x_min) ** -self.shape

    def truncation_lag(self, rel_tol=1e-12):
        """Smallest lag whose tail carries less than ``rel_tol`` of the mass."""
        if self.family == "null" or self.a == 0:
            return 0.0
        if self.family == "exponential":
            return -math.log(rel_tol) / self.rate
        if self.family == "uniform":
            return self.width
        return self.x_min * (rel_tol ** (-1.0 / self.shape) - 1)

    def sample(self, n, rng):
        """``n`` draws from the normalized kernel by CDF inversion; all ``> 0``."""
        if self.family == "null" or self.a == 0:
            raise ValueError("kernel with zero mass has no sampler")
        u = open_uniform(n, rng)
        if self.family == "exponential":
            return -np.log(u) / self.rate
        if self.family == "uniform":
            return u * self.width
        return self.x_min * np.expm1(-np.log(u) / self.shape)

    def to_dict(self):
        out = {"family": self.family}
        for name in _PARAMS[self.family]:
            out[name] = getattr(self, name)
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        family = d.pop("family")
        if family not in FAMILIES:
            raise ValueError(f"unknown kernel family {family!r}")
        if set(d) - set(_PARAMS[family]):
            raise ValueError(f"unexpected parameters for {family}: {sorted(set(d) - set(_PARAMS[family]))}")
        return cls(family, **{k: float(v) for k, v in d.items()})


class HawkesModel:
    """Base rates ``mu`` and kernels ``kernels[source][target]``.

    ``kernels[a][b]`` is the function by which a type-``a`` point raises the
    type-``b`` intensity. With ``check=True`` (the default) construction fails
    unless the interaction matrix has spectral radius below one.
    """

    def __init__(self, mu, kernels, check=True):
        mu = np.array(mu, dtype=float)
        if mu.ndim != 1 or mu.size < 1:
            raise ValueError("mu must be a nonempty vector")
        if np.any(mu < 0) or not np.all(np.isfinite(mu)):
            raise ValueError("base rates must be finite and nonnegative")
        m = mu.size
        if len(kernels) != m or any(len(row) != m for row in kernels):
            raise ValueError(f"kernel table must be {m}x{m}")
        mu.setflags(write=False)
        self.mu = mu
        self.kernels = tuple(tuple(k if isinstance(k, KernelSpec) else KernelSpec.from_dict(k) for k in row)
                             for row in kernels)
        self._h = InteractionMatrix([[k.l1_norm() for k in row] for row in self.kernels])
        if check:
            spr = spectral_radius(self._h)
            if spr >= 1:
                raise SubcriticalityViolated(spr, 1.0)

    @property
    def m(self):
        return self.mu.size

    def interaction_matrix(self):
        return self._h

    def samplers(self):
        """``samplers[a][b](n, rng)``: birth-date gaps of type-``b`` children of type ``a``."""
        return [[k.sample if k.a > 0 else None for k in row] for row in self.kernels]

    @classmethod
    def from_matrix(cls, h, mu, family="exponential", **params):
        """One kernel family for every entry, masses taken from ``h``."""
        h = np.asarray(h, dtype=float)
        kernels = [[KernelSpec.null() if v == 0 else KernelSpec(family, a=float(v), **params) for v in row]
                   for row in h]
        return cls(mu, kernels)

    def to_dict(self):
        return {"mu": self.mu.tolist(), "kernels": [[k.to_dict() for k in row] for row in self.kernels]}

    @classmethod
    def from_dict(cls, d, check=True):
        return cls(d["mu"], [[KernelSpec.from_dict(k) for k in row] for row in d["kernels"]], check=check)

    def __eq__(self, other):
        return (isinstance(other, HawkesModel) and np.array_equal(self.mu, other.mu)
                and self.kernels == other.kernels)

    def __repr__(self):
        return f"HawkesModel(mu={self.mu.tolist()}, H={self._h.tolist()})"


def cluster_mean_sizes(h):
    """``(I - H)^{-1} 1``: mean total progeny per root type."""
    a = np.asarray(InteractionMatrix(h) if not isinstance(h, InteractionMatrix) else h)
    return np.linalg.solve(np.eye(a.shape[0]) - a, np.ones(a.shape[0]))


def expected_count(model, length):
    """Stationary mean number of points in a window of ``length``: ``L mu^T (I - H)^{-1} 1``."""
    return float(length * model.mu @ cluster_mean_sizes(model.interaction_matrix()))
