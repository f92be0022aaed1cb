"""Sine-basis Galerkin propagation for driven boxes with an arbitrary smooth wall.

The fixed-domain function is expanded as phi(y, t) = sum_n C_n(t) sin(n pi y),
so that sum |C_n|^2 is the norm of Psi. The coefficients obey

    i L^2 dC_n/dt = (pi^2 n^2 / 2) C_n + sum_m V_nm C_m,
    V_nm = L^3 L'' I1_nm + 2 eps L^3 cos(omega t) I2_nm,

with I1 = <sin_n| y^2 |sin_m> and I2 = <sin_n| y |sin_m>. A quadratic drive
adds 2 eps L^4 cos(omega t) I1 and a pure-time V(t) adds L^2 V(t) on the
diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _backend, _fallback
from .exact import DomainError, from_fixed_domain
from .potentials import Potential
from .walls import WallLaw, eval_wall

RTOL = 1e-9
ATOL = 1e-12
NORM_GATE = 1e-6
MAX_STEPS = 20_000_000


class SolverError(RuntimeError):
    """The time integration could not complete."""


class NormDriftError(SolverError):
    """sum |C_n|^2 drifted beyond the allowed gate."""


class StepSizeError(SolverError):
    """Step size underflow or step budget exhausted."""


@dataclass(frozen=True)
class CouplingMatrices:
    """I1_nm = int y^2 sin(n pi y) sin(m pi y), I2_nm = int y sin sin, on [0, 1]."""

    I1: np.ndarray
    I2: np.ndarray

    @property
    def N(self) -> int:
        return self.I1.shape[0]


def _alt(k):
    return 1.0 - 2.0 * (np.abs(k) % 2)


@lru_cache(maxsize=16)
def coupling_matrices(N: int) -> CouplingMatrices:
    if N < 2:
        raise ValueError("basis size N must be >= 2")
    n = np.arange(1, N + 1)[:, None]
    m = n.T
    d = m - n
    s = m + n
    dd = np.where(d == 0, 1, d).astype(float) ** 2
    ss = s.astype(float) ** 2
    I1 = (_alt(d) / dd - _alt(s) / ss) / np.pi ** 2
    I2 = ((_alt(d) - 1.0) / dd - (_alt(s) - 1.0) / ss) / (2 * np.pi ** 2)
    k = np.arange(1, N + 1)
    I1[np.diag_indices(N)] = 1.0 / 6.0 - 1.0 / (4.0 * k ** 2 * np.pi ** 2)
    I2[np.diag_indices(N)] = 0.25
    for arr in (I1, I2):
        arr.setflags(write=False)
    return CouplingMatrices(I1, I2)


@lru_cache(maxsize=16)
def derivative_matrix(N: int) -> np.ndarray:
    """D_nm = int_0^1 y sin(n pi y) d/dy sin(m pi y) dy."""

    def ysin(k):
        k = np.asarray(k, dtype=float)
        safe = np.where(k == 0, 1.0, k)
        return np.where(k == 0, 0.0, -_alt(k) / (safe * np.pi))

    n = np.arange(1, N + 1)[:, None]
    m = n.T
    D = 0.5 * (ysin(n + m) + ysin(n - m)) * (m * np.pi)
    D.setflags(write=False)
    return D


def kinetic_diagonal(N: int) -> np.ndarray:
    k = np.arange(1, N + 1)
    return 0.5 * (np.pi * k) ** 2


@dataclass
class GalerkinState:
    """Sine-basis coefficients at time ``t`` for a given wall and drive."""

    coefficients: np.ndarray
    t: float
    law: WallLaw
    potential: Potential = field(default_factory=Potential.none)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.ndim != 1 or self.N < 2:
            raise ValueError("coefficients must be a vector with N >= 2")

    @property
    def N(self) -> int:
        return self.coefficients.shape[0]

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    @classmethod
    def basis_state(cls, N, law, potential=None, n=1, t=0.0):
        c = np.zeros(N, dtype=complex)
        c[n - 1] = 1.0
        return cls(c, t, law, potential or Potential.none())

    @classmethod
    def from_fixed_domain(cls, phi, N, law, potential=None, t=0.0, nodes=None):
        """Project a fixed-domain function (transform scale) onto the sine basis."""
        nodes = nodes or max(256, 8 * N)
        x, w = np.polynomial.legendre.leggauss(nodes)
        y = 0.5 * (x + 1.0)
        vals = np.asarray(phi(y), dtype=complex)
        k = np.arange(1, N + 1)
        c = (np.sin(np.pi * np.outer(k, y)) * (w * vals)).sum(axis=1)
        return cls(c, t, law, potential or Potential.none())


def _model(law: WallLaw, potential: Potential):
    """Codes for the compiled stepper, or None when a Python callback is needed."""
    if law.kind == "constant":
        wall = (0, (law.L0, 0.0, 0.0, 0.0))
    elif law.kind == "sqrt_quadratic":
        wall = (1, (law.alpha, law.beta, law.gamma, 0.0))
    else:
        wall = (2, (law.L0, law.a, law.omega0, law.phase))
    drive = [0.0] * 10
    p = potential
    if p.kind == "inverse_square":
        raise ValueError("the sine-basis propagator does not support the inverse-square potential")
    if p.func is not None:
        return None
    if p.kind == "linear_drive":
        drive[0:3] = (p.epsilon, p.omega, p.phase)
    elif p.kind == "quadratic_drive":
        drive[3:6] = (p.epsilon, p.omega, p.phase)
    elif p.kind == "pure_time":
        drive[6:10] = (p.v0, p.v1, p.omega, p.phase)
    return wall[0], np.array(wall[1], dtype=float), np.array(drive, dtype=float)


def hamiltonian_matrix(law: WallLaw, potential: Potential, t: float, N: int) -> np.ndarray:
    """H_nm(t) such that i L^2 dC/dt = H C (real symmetric)."""
    cm = coupling_matrices(N)
    L, _, Ldd = eval_wall(law, t)
    H = np.diag(kinetic_diagonal(N)) + L ** 3 * Ldd * cm.I1
    f = float(potential.time_factor(t))
    if potential.kind in ("linear", "linear_drive"):
        H = H + 2 * L ** 3 * f * cm.I2
    elif potential.kind == "quadratic_drive":
        H = H + 2 * L ** 4 * f * cm.I1
    elif potential.kind == "pure_time":
        H = H + L ** 2 * f * np.eye(N)
    elif potential.kind == "inverse_square":
        raise ValueError("the sine-basis propagator does not support the inverse-square potential")
    return H


def _generic_rhs(law, potential, N):
    cm = coupling_matrices(N)
    kin = kinetic_diagonal(N)

    def f(t, y):
        L, _, Ldd = eval_wall(law, t)
        L2 = L * L
        s = kin * y + L2 * L * Ldd * (cm.I1 @ y)
        v = float(potential.time_factor(t))
        if potential.kind in ("linear", "linear_drive"):
            s = s + 2 * L2 * L * v * (cm.I2 @ y)
        elif potential.kind == "quadratic_drive":
            s = s + 2 * L2 * L2 * v * (cm.I1 @ y)
        elif potential.kind == "pure_time":
            s = s + L2 * v * y
        return -1j * s / L2

    return f


def rhs(state: GalerkinState, t: float | None = None) -> np.ndarray:
    """dC/dt at time ``t`` (defaults to the state's time)."""
    t = state.t if t is None else t
    H = hamiltonian_matrix(state.law, state.potential, t, state.N)
    L, _, _ = eval_wall(state.law, t)
    return -1j * (H @ state.coefficients) / L ** 2


def _initial_step(f, t0, y0, rtol, atol, t_span):
    sc = atol + rtol * np.abs(y0)
    f0 = f(t0, y0)
    d0 = np.sqrt(np.mean((np.abs(y0) / sc) ** 2))
    d1 = np.sqrt(np.mean((np.abs(f0) / sc) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t_span)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.sqrt(np.mean((np.abs(f1 - f0) / sc) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100 * h0, h1, t_span)


def sample_grid(t0: float, t_end: float, dt: float) -> np.ndarray:
    """t0, t0 + dt, ..., closing exactly on t_end."""
    n = int(math.floor((t_end - t0) / dt + 1e-9))
    times = t0 + dt * np.arange(n + 1)
    if t_end - times[-1] > 1e-9 * max(1.0, abs(t_end)):
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return times


@dataclass
class Trajectory:
    """Coefficients sampled at ``times`` (rows) from one propagation."""

    times: np.ndarray
    coefficients: np.ndarray
    law: WallLaw
    potential: Potential
    stats: dict

    @property
    def N(self) -> int:
        return self.coefficients.shape[1]

    @property
    def norms(self) -> np.ndarray:
        return np.sum(np.abs(self.coefficients) ** 2, axis=1)

    def __len__(self):
        return self.times.shape[0]

    def state(self, i: int) -> GalerkinState:
        return GalerkinState(self.coefficients[i].copy(), float(self.times[i]), self.law, self.potential)

    @property
    def states(self):
        return [self.state(i) for i in range(len(self))]

    @property
    def final(self) -> GalerkinState:
        return self.state(len(self) - 1)


def propagate(initial: GalerkinState, t_end: float, dt: float | None = None, *,
              times=None, rtol: float = RTOL, atol: float = ATOL,
              norm_gate: float = NORM_GATE, max_steps: int = MAX_STEPS,
              backend: str | None = None) -> Trajectory:
    """Integrate the coefficient system from ``initial.t`` to ``t_end``.

    Output is produced exactly at ``times`` (or on a uniform grid of spacing
    ``dt``); the embedded DOPRI5 pair picks its own internal steps. Raises
    :class:`NormDriftError` when sum |C|^2 moves by more than ``norm_gate``.
    """
    t0 = float(initial.t)
    if not t_end > t0:
        raise ValueError("t_end must be after the initial time")
    if times is None:
        times = sample_grid(t0, t_end, dt if dt is not None else (t_end - t0))
    times = np.ascontiguousarray(times, dtype=float)
    if times[0] < t0 or np.any(np.diff(times) <= 0) or times[-1] > t_end + 1e-12:
        raise ValueError("sample times must be increasing within [t0, t_end]")
    # horizon check
    eval_wall(initial.law, np.array([t0, times[-1]]))

    N = initial.N
    cm = coupling_matrices(N)
    kin = kinetic_diagonal(N)
    c0 = np.ascontiguousarray(initial.coefficients, dtype=complex)
    model = _model(initial.law, initial.potential)
    use = backend or _backend.BACKEND
    if model is None:
        f = _generic_rhs(initial.law, initial.potential, N)
        h0 = _initial_step(f, t0, c0, rtol, atol, times[-1] - t0)
        coeffs, status, stats = _fallback.dopri_propagate_rhs(f, c0, t0, times, rtol, atol, h0, max_steps)
        stats["backend"] = "python-callback"
    else:
        kind, wall, drive = model
        f = _fallback.make_rhs(cm.I1, cm.I2, kin, kind, wall, tuple(drive))
        h0 = _initial_step(f, t0, c0, rtol, atol, times[-1] - t0)
        if use not in ("compiled", "python"):
            raise ValueError(f"unknown backend {use!r}")
        if use == "compiled" and _backend.BACKEND != "compiled":
            raise RuntimeError("compiled backend requested but qbox._core is not built")
        impl = _backend.dopri_propagate if use == "compiled" else _fallback.dopri_propagate
        coeffs, status, stats = impl(c0, t0, times, np.ascontiguousarray(cm.I1),
                                     np.ascontiguousarray(cm.I2), kin, kind, wall, drive,
                                     rtol, atol, h0, max_steps)
        stats = dict(stats)
        stats["backend"] = use
    coeffs = np.asarray(coeffs)
    if status == 1:
        raise StepSizeError(f"step size underflow at t={stats['t_reached']:.6g}")
    if status == 2:
        raise StepSizeError(f"step budget {max_steps} exhausted at t={stats['t_reached']:.6g}")
    norms = np.sum(np.abs(coeffs) ** 2, axis=1)
    drift = float(np.max(np.abs(norms - initial.norm)))
    stats["norm_drift"] = drift
    if drift > norm_gate:
        raise NormDriftError(f"norm drift {drift:.3e} exceeds gate {norm_gate:.1e}")
    return Trajectory(times, coeffs, initial.law, initial.potential, stats)


def fixed_domain_phi(coefficients, y):
    """phi(y) = sum_n C_n sin(n pi y) on the transform scale."""
    y = np.asarray(y, dtype=float)
    k = np.arange(1, len(coefficients) + 1)
    return np.sin(np.pi * np.multiply.outer(y, k)) @ np.asarray(coefficients)


def reconstruct_psi(state: GalerkinState, x) -> np.ndarray:
    """Psi(x, t) on points of [0, L(t)]."""
    x = np.asarray(x, dtype=float)
    L, Ld, _ = eval_wall(state.law, state.t)
    if np.any(x < 0) or np.any(x > L * (1 + 1e-12)):
        raise DomainError(f"x outside [0, L(t)] = [0, {L}]")
    y = np.clip(x / L, 0.0, 1.0)
    return from_fixed_domain(fixed_domain_phi(state.coefficients, y), y, L, Ld)
