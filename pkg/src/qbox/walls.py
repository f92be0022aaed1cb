"""Wall trajectories L(t), the rescaled clock tau(t), and separability checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .potentials import Potential

SEPARABILITY_SAMPLES = 1024
SEPARABILITY_TOL = 1e-9


class HorizonError(ValueError):
    """Time outside the window the wall law was validated for."""


@dataclass(frozen=True)
class WallLaw:
    """Position of the moving wall; the left wall sits at x = 0.

    kinds:
      ``constant``        L = L0
      ``sqrt_quadratic``  L = sqrt(alpha t^2 + beta t + gamma)
      ``oscillating``     L = L0 + a cos(omega0 t + phase)
    """

    kind: str
    L0: float = 0.0
    a: float = 0.0
    omega0: float = 0.0
    phase: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    horizon: float = math.inf

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.kind == "constant":
            if not self.L0 > 0:
                raise ValueError(f"L0 must be positive, got {self.L0}")
        elif self.kind == "oscillating":
            if not self.a >= 0:
                raise ValueError(f"a must be >= 0, got {self.a}")
            if not self.L0 > self.a:
                raise ValueError(f"L0 must exceed a, got L0={self.L0}, a={self.a}")
        elif self.kind == "sqrt_quadratic":
            if not self.gamma > 0:
                raise ValueError(f"gamma must be positive, got {self.gamma}")
            if self._min_square() <= 0:
                raise ValueError("alpha t^2 + beta t + gamma must stay positive over the horizon")
        else:
            raise ValueError(f"unknown wall kind {self.kind!r}")

    @classmethod
    def constant(cls, L0, horizon=math.inf):
        return cls("constant", L0=L0, horizon=horizon)

    @classmethod
    def oscillating(cls, L0, a, omega0, phase=0.0, horizon=math.inf):
        return cls("oscillating", L0=L0, a=a, omega0=omega0, phase=phase, horizon=horizon)

    @classmethod
    def sqrt_quadratic(cls, alpha, beta, gamma, horizon=math.inf):
        return cls("sqrt_quadratic", alpha=alpha, beta=beta, gamma=gamma, horizon=horizon)

    def _min_square(self):
        al, be, ga, T = self.alpha, self.beta, self.gamma, self.horizon
        cands = [ga]
        if math.isinf(T):
            if al < 0 or (al == 0 and be < 0):
                return -math.inf
        else:
            cands.append((al * T + be) * T + ga)
        if al > 0:
            tv = -be / (2 * al)
            if 0 < tv < T:
                cands.append((al * tv + be) * tv + ga)
        return min(cands)

    def __call__(self, t):
        return eval_wall(self, t)


def eval_wall(law: WallLaw, t):
    """(L, dL/dt, d2L/dt2) at time(s) ``t``, from closed-form derivatives."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > law.horizon * (1 + 1e-12)):
        raise HorizonError(f"t outside [0, {law.horizon}]")
    if law.kind == "constant":
        L = np.full_like(t, law.L0)
        Ld = np.zeros_like(t)
        Ldd = np.zeros_like(t)
    elif law.kind == "oscillating":
        ph = law.omega0 * t + law.phase
        L = law.L0 + law.a * np.cos(ph)
        Ld = -law.a * law.omega0 * np.sin(ph)
        Ldd = -law.a * law.omega0 ** 2 * np.cos(ph)
    else:
        q = (law.alpha * t + law.beta) * t + law.gamma
        L = np.sqrt(q)
        Ld = (2 * law.alpha * t + law.beta) / (2 * L)
        Ldd = (law.alpha - Ld ** 2) / L
    if t.ndim == 0:
        return float(L), float(Ld), float(Ldd)
    return L, Ld, Ldd


def _tau_sqrt_quadratic(law, t):
    al, be, ga = law.alpha, law.beta, law.gamma
    if al == 0.0:
        if be == 0.0:
            return t / ga
        return np.log1p(be * t / ga) / be
    disc = be * be - 4 * al * ga
    if disc < 0:
        s = math.sqrt(-disc)
        return 2.0 / s * (np.arctan((2 * al * t + be) / s) - math.atan(be / s))
    if disc > 0:
        s = math.sqrt(disc)
        u = 2 * al * t + be
        return np.log(np.abs((u - s) * (be + s) / ((u + s) * (be - s)))) / s
    return 2.0 / be - 2.0 / (2 * al * t + be)


def tau_clock(law: WallLaw, t):
    """tau(t) = integral of ds / L(s)^2 from 0 to t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise HorizonError("tau_clock needs t >= 0")
    if law.kind == "constant":
        out = t / law.L0 ** 2
    elif law.kind == "sqrt_quadratic":
        out = _tau_sqrt_quadratic(law, t)
    else:
        def inv_l2(s):
            return 1.0 / (law.L0 + law.a * math.cos(law.omega0 * s + law.phase)) ** 2

        flat = t.ravel()
        order = np.argsort(flat)
        acc = 0.0
        prev = 0.0
        res = np.empty_like(flat)
        for i in order:
            if flat[i] > prev:
                val, _ = quad(inv_l2, prev, flat[i], epsabs=1e-12, epsrel=1e-13, limit=1000)
                acc += val
                prev = flat[i]
            res[i] = acc
        out = res.reshape(t.shape)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class SeparabilityReport:
    """Outcome of :func:`check_separability`.

    ``b_squared`` is -4 L^3 L'' (or its family analogue) when separable.
    ``reason`` is ``"ok"``, ``"imaginary_b"`` (separable with B^2 < 0),
    ``"not_constant"`` or ``"unsupported"``.
    """

    separable: bool
    family: str
    constraint_residual: float
    reason: str
    b_squared: Optional[float] = None

    @property
    def B(self) -> Optional[complex]:
        if self.b_squared is None:
            return None
        return complex(np.sqrt(complex(self.b_squared)))


def check_separability(law: WallLaw, potential: Potential = None, horizon: float = None,
                       tol: float = SEPARABILITY_TOL) -> SeparabilityReport:
    """Test whether space and time separate for this wall and potential.

    Samples the family's constraint expression on a uniform grid over
    ``[0, horizon]``; it is separable when the spread (max - min) is within
    ``tol``.
    """
    potential = potential or Potential.none()
    if horizon is None:
        horizon = law.horizon
    if not (horizon > 0) or math.isinf(horizon):
        raise ValueError("check_separability needs a finite positive horizon")
    t = np.linspace(0.0, horizon, SEPARABILITY_SAMPLES + 1)
    L, _, Ldd = eval_wall(law, t)
    l3ldd = L ** 3 * Ldd
    kind = potential.kind

    def spread(v):
        return float(np.max(v) - np.min(v))

    if kind in ("none", "pure_time", "inverse_square"):
        family = "4L^3L''"
        exprs = [4 * l3ldd]
        b2 = -float(np.mean(4 * l3ldd))
    elif kind in ("linear", "linear_drive"):
        family = "L^3L'', L^3 eps(t)"
        exprs = [l3ldd, L ** 3 * potential.time_factor(t)]
        b2 = -4 * float(np.mean(l3ldd))
    elif kind == "quadratic_drive":
        family = "L^3L'' + 2 eps L^4 cos(wt)"
        exprs = [l3ldd + 2 * L ** 4 * potential.time_factor(t)]
        b2 = -4 * float(np.mean(exprs[0]))
    else:
        return SeparabilityReport(False, kind, math.inf, "unsupported")
    residual = max(spread(e) for e in exprs)
    if residual > tol:
        return SeparabilityReport(False, family, residual, "not_constant")
    if abs(b2) <= tol:
        b2 = 0.0
    reason = "ok" if b2 >= 0 else "imaginary_b"
    return SeparabilityReport(True, family, residual, reason, b2)
