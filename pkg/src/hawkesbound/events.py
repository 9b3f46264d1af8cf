"""Realizations of a multivariate point process on a half-open window."""

import csv
import io

import numpy as np


class EventSequence:
    """Time-sorted ``(time, type)`` points inside the window ``[a, b)``.

    Types are 1-based. ``has_ties`` reports identical times across points,
    which a Hawkes process almost surely never produces.
    """

    def __init__(self, times, types, window):
        times = np.asarray(times, dtype=float)
        types = np.asarray(types, dtype=np.int64)
        if times.shape != types.shape or times.ndim != 1:
            raise ValueError("times and types must be 1-d arrays of equal length")
        a, b = window
        if times.size and (np.any(np.diff(times) < 0) or times[0] < a or times[-1] >= b):
            raise ValueError("events must be sorted and inside the window")
        self.times = times
        self.types = types
        self.window = (float(a), float(b))

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        return (isinstance(other, EventSequence) and self.window == other.window
                and np.array_equal(self.times, other.times) and np.array_equal(self.types, other.types))

    def __repr__(self):
        return f"EventSequence(n={len(self)}, window={self.window})"

    @property
    def events(self):
        return list(zip(self.times.tolist(), self.types.tolist()))

    @property
    def has_ties(self):
        return bool(np.any(np.diff(self.times) == 0))

    def count(self, a=None, b=None):
        a = self.window[0] if a is None else a
        b = self.window[1] if b is None else b
        return int(np.searchsorted(self.times, b, "left") - np.searchsorted(self.times, a, "left"))

    def to_csv(self, path=None):
        """Write ``time,type`` rows, times with 17 significant digits.

        Returns the text when ``path`` is None.
        """
        buf = io.StringIO()
        buf.write("time,type\n")
        for t, k in zip(self.times.tolist(), self.types.tolist()):
            buf.write(f"{t:.17g},{k}\n")
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path, window):
        with open(path, newline="") as fh:
            return cls.parse_csv(fh.read(), window)

    @classmethod
    def parse_csv(cls, text, window):
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls([float(r["time"]) for r in rows], [int(r["type"]) for r in rows], window)


class WindowBatch:
    """Many replicate windows stored flat.

    ``rep``, ``times`` and ``types`` are sorted by replicate then time.
    """

    def __init__(self, rep, times, types, window, n_reps):
        self.rep = np.asarray(rep, dtype=np.int64)
        self.times = np.asarray(times, dtype=float)
        self.types = np.asarray(types, dtype=np.int64)
        self.window = (float(window[0]), float(window[1]))
        self.n_reps = int(n_reps)
        self._bounds = np.searchsorted(self.rep, np.arange(self.n_reps + 1))

    @classmethod
    def concat(cls, batches, window):
        reps, times, types = [], [], []
        offset = 0
        for batch in batches:
            reps.append(batch.rep + offset)
            times.append(batch.times)
            types.append(batch.types)
            offset += batch.n_reps
        if not batches:
            return cls([], [], [], window, 0)
        return cls(np.concatenate(reps), np.concatenate(times), np.concatenate(types), window, offset)

    def __len__(self):
        return self.n_reps

    def __getitem__(self, i):
        lo, hi = self._bounds[i], self._bounds[i + 1]
        return EventSequence(self.times[lo:hi], self.types[lo:hi], self.window)

    def counts(self, a=None, b=None, type_=None):
        """Per-replicate number of points in ``[a, b)``, optionally of one (1-based) type."""
        a = self.window[0] if a is None else a
        b = self.window[1] if b is None else b
        mask = (self.times >= a) & (self.times < b)
        if type_ is not None:
            mask &= self.types == type_
        return np.bincount(self.rep[mask], minlength=self.n_reps)

    def apply(self, f):
        """Per-replicate ``N(f) = sum of f over the points``."""
        return np.bincount(self.rep, weights=f(self.times), minlength=self.n_reps)
