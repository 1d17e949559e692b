"""Initial and reference number densities with exact cell integrals."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class ExponentialDensity:
    """``amplitude * exp(-rate * x)``."""

    amplitude: float = 1.0
    rate: float = 1.0

    def __call__(self, x):
        return self.amplitude * np.exp(-self.rate * np.asarray(x, dtype=float))

    def integral(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lam = self.rate
        return self.amplitude / lam * np.exp(-lam * a) * -np.expm1(-lam * (b - a))


@dataclass(frozen=True)
class ZeroDensity:
    def __call__(self, x):
        return np.zeros(np.shape(x))

    def integral(self, a, b):
        return np.zeros(np.broadcast(np.asarray(a), np.asarray(b)).shape)


class TabulatedDensity:
    """Piecewise-linear interpolant of ``(x, c)`` samples, zero outside the table."""

    def __init__(self, x, c):
        x = np.asarray(x, dtype=float)
        c = np.asarray(c, dtype=float)
        if x.ndim != 1 or x.shape != c.shape or x.size < 2:
            raise ValueError("a density table needs matching 1-D x and c columns with >= 2 rows")
        if np.any(np.diff(x) <= 0):
            raise ValueError("density table x column must be strictly increasing")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("density table values must be finite and nonnegative")
        self.x = x
        self.c = c
        self._cum = np.concatenate([[0.0], np.cumsum(0.5 * (c[1:] + c[:-1]) * np.diff(x))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "TabulatedDensity":
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        if data.shape[1] < 2:
            raise ValueError(f"{path}: expected two columns x,c")
        return cls(data[:, 0], data[:, 1])

    def __call__(self, x):
        return np.interp(x, self.x, self.c, left=0.0, right=0.0)

    def _primitive(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.x[0], self.x[-1])
        k = np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, self.x.size - 2)
        c0 = self.c[k]
        slope = (self.c[k + 1] - c0) / (self.x[k + 1] - self.x[k])
        d = x - self.x[k]
        return self._cum[k] + c0 * d + 0.5 * slope * d * d

    def integral(self, a, b):
        return self._primitive(b) - self._primitive(a)
