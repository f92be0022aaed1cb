"""External potentials acting on the confined particle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

KINDS = ("none", "pure_time", "inverse_square", "linear", "quadratic_drive", "linear_drive")


@dataclass(frozen=True)
class Potential:
    """Tagged union of the supported potential families.

    ``none``             V = 0
    ``pure_time``        V(t) = v0 + v1 cos(omega t + phase), or ``func(t)``
    ``inverse_square``   V = alpha / x^2
    ``linear``           V = x * func(t)
    ``quadratic_drive``  V = epsilon x^2 cos(omega t + phase)
    ``linear_drive``     V = epsilon x cos(omega t + phase)
    """

    kind: str = "none"
    epsilon: float = 0.0
    omega: float = 0.0
    phase: float = 0.0
    v0: float = 0.0
    v1: float = 0.0
    alpha: float = 0.0
    func: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "linear" and self.func is None:
            raise ValueError("linear potential needs func(t) giving the field strength")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def pure_time(cls, v0=0.0, v1=0.0, omega=0.0, phase=0.0, func=None):
        return cls("pure_time", omega=omega, phase=phase, v0=v0, v1=v1, func=func)

    @classmethod
    def inverse_square(cls, alpha):
        return cls("inverse_square", alpha=alpha)

    @classmethod
    def linear(cls, func):
        return cls("linear", func=func)

    @classmethod
    def quadratic_drive(cls, epsilon, omega, phase=0.0):
        return cls("quadratic_drive", epsilon=epsilon, omega=omega, phase=phase)

    @classmethod
    def linear_drive(cls, epsilon, omega, phase=0.0):
        return cls("linear_drive", epsilon=epsilon, omega=omega, phase=phase)

    @property
    def position_independent(self) -> bool:
        return self.kind in ("none", "pure_time")

    def time_factor(self, t):
        """The purely time-dependent factor: V(t), eps(t), or eps cos(omega t + phase)."""
        t = np.asarray(t, dtype=float)
        if self.kind == "none":
            return np.zeros_like(t)
        if self.func is not None:
            return np.vectorize(self.func, otypes=[float])(t)
        if self.kind == "pure_time":
            return self.v0 + self.v1 * np.cos(self.omega * t + self.phase)
        if self.kind in ("quadratic_drive", "linear_drive"):
            return self.epsilon * np.cos(self.omega * t + self.phase)
        if self.kind == "inverse_square":
            return np.full_like(t, self.alpha)
        raise AssertionError(self.kind)

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        f = self.time_factor(t)
        if self.kind in ("none", "pure_time"):
            return f + 0.0 * x
        if self.kind == "inverse_square":
            return f / x ** 2
        if self.kind in ("linear", "linear_drive"):
            return f * x
        return f * x ** 2

    def time_integral(self, t):
        """Integral of V(s) from 0 to t for position-independent potentials."""
        if self.kind == "none":
            return 0.0
        if self.kind != "pure_time":
            raise ValueError(f"time_integral is defined for position-independent potentials, not {self.kind!r}")
        if self.func is not None:
            val, _ = quad(self.func, 0.0, t, epsabs=1e-12, epsrel=1e-12, limit=500)
            return val
        out = self.v0 * t
        if self.v1 != 0.0:
            if self.omega == 0.0:
                out += self.v1 * np.cos(self.phase) * t
            else:
                out += self.v1 * (np.sin(self.omega * t + self.phase) - np.sin(self.phase)) / self.omega
        return out
