"""Norm, kinetic energy, quantum force, dipole moment and the HHG spectrum.

All quantities follow the fixed-domain convention of the transform
Psi = sqrt(2/L) exp(i L L' y^2 / 2) phi, under which a unit-norm Psi has
int |phi|^2 dy = 1/2 and

    E_k = S0 / L^2 + (2 L'/L) Im S1 + L'^2 S2,
    F   = 2 S0 / L^3 + (2 L'/L^2) Im S1,

with S0 = int |phi_y|^2, S1 = int y phi* phi_y and S2 = int y^2 |phi|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.integrate import quad_vec

from .exact import ExactState, evaluate_psi
from .galerkin import (GalerkinState, Trajectory, coupling_matrices, derivative_matrix,
                       kinetic_diagonal, reconstruct_psi)
from .specfun import KummerMode, _evaluate
from .walls import eval_wall

State = Union[GalerkinState, ExactState]

QUAD_ATOL = 1e-10
GRID_POINTS = 16384
MIN_SAMPLES_PER_PERIOD = 20


class QuadratureError(RuntimeError):
    """Adaptive quadrature of the Kummer-product integrals did not converge."""


class NyquistError(ValueError):
    """Dipole series too coarse for the requested harmonic range."""


@dataclass(frozen=True)
class SDecomposition:
    S0: float
    S1: complex
    S2: float

    def kinetic_energy(self, L, Ldot):
        return self.S0 / L ** 2 + 2 * Ldot / L * self.S1.imag + Ldot ** 2 * self.S2

    def force(self, L, Ldot):
        return 2 * self.S0 / L ** 3 + 2 * Ldot / L ** 2 * self.S1.imag


@dataclass(frozen=True)
class ObservableSample:
    t: float
    L: float
    norm: float
    E_k: float
    F: float
    d: float


@dataclass
class TimeSeries:
    """Observables sampled on a time grid (one entry per sample)."""

    t: np.ndarray
    L: np.ndarray
    norm: np.ndarray
    E_k: np.ndarray
    F: np.ndarray
    d: np.ndarray

    COLUMNS = ("t", "L", "norm", "E_k", "F", "d")

    def __len__(self):
        return self.t.shape[0]

    def as_array(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in self.COLUMNS])

    def sample(self, i: int) -> ObservableSample:
        return ObservableSample(*(float(getattr(self, c)[i]) for c in self.COLUMNS))


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray
    intensities: np.ndarray
    omega: float
    T: float

    @property
    def harmonic_orders(self) -> np.ndarray:
        return self.frequencies / self.omega


# ---------------------------------------------------------------------------
# Kummer-basis integrals


def _weight(B: complex, y):
    # |exp(-iB y^2/4)|^2; identically 1 for real B
    return np.exp(0.5 * B.imag * y ** 2)


@lru_cache(maxsize=32)
def _kummer_integrals(modes: tuple[KummerMode, ...]) -> dict:
    """The six Kummer-product integrals plus the dipole moment integral.

    Index convention: ``I[n, m]`` conjugates the n-th factor. ``I2`` and
    ``I5`` pair the base function with the shifted one, ``M(a+1, 5/2)``.
    """
    B = modes[0].B
    a = np.array([m.a for m in modes])
    # atol for each Kummer evaluation, well under the quadrature target
    atol = 1e-14 / max(m.norm_constant for m in modes)

    def integrand(y):
        z = 0.5j * B * y * y
        M = _evaluate(a, 1.5, z, 1e-13, atol)
        P = _evaluate(a + 1, 2.5, z, 1e-13, atol)
        w = _weight(B, y)
        Mc, Pc = M.conj(), P.conj()
        y2 = y * y
        y4 = y2 * y2
        return w * np.stack([
            np.outer(Mc, M),
            y2 * np.outer(Mc, P),
            y2 * np.outer(Mc, M),
            y4 * np.outer(Pc, P),
            y4 * np.outer(Pc, M),
            y4 * np.outer(Mc, M),
            y2 * y * np.outer(Mc, M),
        ])

    res, err, info = quad_vec(integrand, 0.0, 1.0, epsabs=QUAD_ATOL, epsrel=1e-12,
                              norm="max", limit=2000, full_output=True)
    if not info.success:
        raise QuadratureError(f"Kummer integrals did not converge (error estimate {err:.2e})")
    names = ("I1", "I2", "I3", "I4", "I5", "I6", "Iy")
    out = {k: v for k, v in zip(names, res)}
    for v in out.values():
        v.setflags(write=False)
    return out


def kummer_integrals(modes: Sequence[KummerMode]) -> dict:
    """``{"I1": ..., "I6": ..., "Iy": ...}`` as (n, m) matrices for a mode set."""
    modes = tuple(modes)
    if len({m.b_squared for m in modes}) != 1:
        raise ValueError("all modes must share one B")
    if modes[0].b_squared == 0.0:
        raise ValueError("the Kummer integrals are singular at B = 0; use the sine basis")
    return _kummer_integrals(modes)


def _kummer_s(modes, c) -> SDecomposition:
    B = modes[0].B
    Bc = B.conjugate()
    I = kummer_integrals(modes)
    W = np.array([m.W for m in modes])
    Wc = W.conj()[:, None]
    Wm = W[None, :]
    I2h = I["I2"].conj().T
    I5h = I["I5"].conj().T
    S0_kernel = (I["I1"] + Wm / 6 * I["I2"] + Wc / 6 * I2h + Wc * Wm / 36 * I["I4"]
                 - 1j * B * Wc / 12 * I["I5"] + 1j * Bc * Wm / 12 * I5h
                 + abs(B) ** 2 / 4 * I["I6"] + 0.5j * (Bc - B) * I["I3"])
    S1_kernel = I["I3"] + Wm / 6 * I5h - 0.5j * B * I["I6"]
    Cn = np.array([m.norm_constant for m in modes])
    # phi = sum c_n Phi_n / sqrt(2)
    v = Cn * np.asarray(c)
    S0 = 0.5 * np.vdot(v, S0_kernel @ v)
    S1 = 0.5 * np.vdot(v, S1_kernel @ v)
    S2 = 0.5 * np.vdot(v, I["I6"] @ v)
    return SDecomposition(float(S0.real), complex(S1), float(S2.real))


def _sine_s(c) -> SDecomposition:
    c = np.asarray(c)
    N = c.shape[-1]
    S0 = np.sum(np.abs(c) ** 2 * kinetic_diagonal(N), axis=-1)
    S1 = np.einsum("...n,nm,...m->...", c.conj(), derivative_matrix(N), c)
    S2 = np.einsum("...n,nm,...m->...", c.conj(), coupling_matrices(N).I1, c).real
    return S0, S1, S2


def s_decomposition(state: State, t: float | None = None) -> SDecomposition:
    """S0, S1, S2 of the fixed-domain wavefunction at time ``t``."""
    if isinstance(state, GalerkinState):
        S0, S1, S2 = _sine_s(state.coefficients)
        return SDecomposition(float(S0), complex(S1), float(S2))
    t = _time(state, t)
    c = state.coefficients(t)
    if state.b_squared == 0.0:
        N = max(m.n for m in state.modes)
        full = np.zeros(max(N, 2), dtype=complex)
        for cn, m in zip(c, state.modes):
            full[m.n - 1] += cn
        S0, S1, S2 = _sine_s(full)
        return SDecomposition(float(S0), complex(S1), float(S2))
    return _kummer_s(state.modes, c)


def _time(state, t):
    if t is None:
        if isinstance(state, GalerkinState):
            return state.t
        raise ValueError("exact states need an explicit time")
    return float(t)


# ---------------------------------------------------------------------------
# point observables


def norm(state: State, t: float | None = None, method: str = "coefficients") -> float:
    """int_0^L |Psi|^2 dx, from the coefficients or by quadrature of Psi."""
    t = _time(state, t)
    if method == "coefficients":
        c = state.coefficients if isinstance(state, GalerkinState) else state.coefficients(t)
        return float(np.sum(np.abs(c) ** 2))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    L, _, _ = eval_wall(state.law, t)
    x, w = _gauss_nodes(state, L)
    psi = _psi(state, x, t)
    return float(np.sum(w * np.abs(psi) ** 2))


def _gauss_nodes(state, L):
    if isinstance(state, GalerkinState):
        nodes = max(256, 4 * state.N)
    else:
        nodes = max(256, 8 * max(m.n for m in state.modes) + 64)
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * L * (x + 1.0), 0.5 * L * w


def _psi(state, x, t):
    if isinstance(state, GalerkinState):
        return reconstruct_psi(state, x)
    return evaluate_psi(state, x, t)


def kinetic_energy(state: State, t: float | None = None) -> float:
    """<E_k> = 1/2 int |dPsi/dx|^2 dx via the S decomposition."""
    t = _time(state, t)
    L, Ld, _ = eval_wall(state.law, t)
    return s_decomposition(state, t).kinetic_energy(L, Ld)


def quantum_force(state: State, t: float | None = None) -> float:
    """<F> = -d<E_k>/dL = 2 S0/L^3 + (2 L'/L^2) Im S1."""
    t = _time(state, t)
    L, Ld, _ = eval_wall(state.law, t)
    return s_decomposition(state, t).force(L, Ld)


def dipole(state: State, t: float | None = None, method: str = "coefficients") -> float:
    """<d> = -<Psi| x |Psi>, so -L <= d <= 0."""
    t = _time(state, t)
    L, _, _ = eval_wall(state.law, t)
    if method == "quadrature":
        x, w = _gauss_nodes(state, L)
        return float(-np.sum(w * x * np.abs(_psi(state, x, t)) ** 2))
    if method != "coefficients":
        raise ValueError(f"unknown method {method!r}")
    if isinstance(state, GalerkinState):
        c = state.coefficients
        return float(-2 * L * np.vdot(c, coupling_matrices(state.N).I2 @ c).real)
    c = state.coefficients(t)
    if state.b_squared == 0.0:
        # sine modes: int y sin(n pi y) sin(m pi y) = I2
        idx = np.array([m.n for m in state.modes]) - 1
        I2 = coupling_matrices(max(2, idx.max() + 1)).I2[np.ix_(idx, idx)]
        return float(-2 * L * np.vdot(c, I2 @ c).real)
    v = np.array([m.norm_constant for m in state.modes]) * c
    # 2L int y |phi|^2 with phi = sum c Phi / sqrt(2)
    return float(-L * np.vdot(v, kummer_integrals(state.modes)["Iy"] @ v).real)


def observe(state: State, t: float | None = None) -> ObservableSample:
    t = _time(state, t)
    L, Ld, _ = eval_wall(state.law, t)
    s = s_decomposition(state, t)
    return ObservableSample(t, L, norm(state, t), s.kinetic_energy(L, Ld), s.force(L, Ld),
                            dipole(state, t))


def time_series(source, times=None) -> TimeSeries:
    """Observables along a Galerkin :class:`Trajectory` or an exact state at ``times``."""
    if isinstance(source, Trajectory):
        t = source.times
        C = source.coefficients
        L, Ld, _ = eval_wall(source.law, t)
        S0, S1, S2 = _sine_s(C)
        nrm = np.sum(np.abs(C) ** 2, axis=1)
        Ek = S0 / L ** 2 + 2 * Ld / L * S1.imag + Ld ** 2 * S2
        F = 2 * S0 / L ** 3 + 2 * Ld / L ** 2 * S1.imag
        I2 = coupling_matrices(source.N).I2
        d = -2 * L * np.einsum("tn,nm,tm->t", C.conj(), I2, C).real
        return TimeSeries(t, L, nrm, Ek, F, d)
    if times is None:
        raise ValueError("exact states need sample times")
    rows = [observe(source, float(tt)) for tt in np.asarray(times, dtype=float)]
    return TimeSeries(*(np.array([getattr(r, c) for r in rows]) for c in TimeSeries.COLUMNS))


# ---------------------------------------------------------------------------
# grid oracle


def _grid_energy(psi, L, points):
    x = np.linspace(0.0, L, points)
    h = x[1] - x[0]
    v = psi(x)
    # forward differences are second-order accurate at interval midpoints
    return 0.5 * np.sum(np.abs(np.diff(v)) ** 2) / h


def grid_kinetic_energy(psi, L: float, points: int = GRID_POINTS) -> float:
    """1/2 int_0^L |Psi'|^2 by finite differences, Richardson step-halving.

    ``psi`` is a vectorized callable on x in [0, L].
    """
    coarse = _grid_energy(psi, L, (points + 1) // 2)
    fine = _grid_energy(psi, L, points)
    return (4 * fine - coarse) / 3


def state_grid_kinetic_energy(state: State, t: float | None = None,
                              points: int = GRID_POINTS) -> float:
    t = _time(state, t)
    L, _, _ = eval_wall(state.law, t)
    return grid_kinetic_energy(lambda x: _psi(state, np.minimum(x, L), t), L, points)


# ---------------------------------------------------------------------------
# high-harmonic spectrum


def hhg_spectrum(t, d, omega: float, T: float | None = None, max_harmonic: float = 40,
                 resolution: int = 8, chunk: int = 64) -> Spectrum:
    """I(nu) = |(1/T) int_0^T exp(-i nu t) d(t) dt|^2 at nu = k omega / resolution.

    The integral is a plain trapezoid sum over the samples, with no window.
    ``d`` must be uniformly sampled on [0, T] with at least
    ``MIN_SAMPLES_PER_PERIOD`` samples per period of the highest frequency.
    """
    t = np.asarray(t, dtype=float)
    d = np.asarray(d, dtype=float)
    if t.ndim != 1 or t.shape != d.shape or t.size < 2:
        raise ValueError("t and d must be matching 1-D series")
    if not (omega > 0 and max_harmonic >= 0 and resolution >= 1):
        raise ValueError("need omega > 0, max_harmonic >= 0 and resolution >= 1")
    T = float(t[-1] - t[0]) if T is None else float(T)
    steps = np.diff(t)
    dt = steps.mean()
    if np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise ValueError("dipole series must be uniformly sampled")
    if abs(t[0]) > 1e-9 * T or abs(t[-1] - T) > 1e-6 * dt:
        raise ValueError(f"dipole series must span [0, {T}]")
    k = np.arange(int(round(max_harmonic * resolution)) + 1)
    nu = k * omega / resolution
    if nu[-1] > 0:
        per_period = 2 * math.pi / (nu[-1] * dt)
        if per_period < MIN_SAMPLES_PER_PERIOD:
            raise NyquistError(f"{per_period:.1f} samples per period of nu = {nu[-1]:g}; "
                               f"need at least {MIN_SAMPLES_PER_PERIOD}")
    w = np.full(t.shape, dt)
    w[0] = w[-1] = 0.5 * dt
    wd = w * d
    amp = np.empty(nu.shape, dtype=complex)
    for s in range(0, nu.size, chunk):
        block = nu[s:s + chunk]
        amp[s:s + chunk] = np.exp(-1j * np.outer(block, t)) @ wd
    inten = np.abs(amp / T) ** 2
    return Spectrum(nu, inten, float(omega), T)
