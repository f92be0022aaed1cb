"""Exact Kummer-mode solutions for separable walls.

With y = x/L and the phase transform

    Psi(x, t) = sqrt(2/L) exp(i L L' y^2 / 2) phi(y, t),

a wall obeying 4 L^3 L'' = -B^2 turns the moving-box problem into the fixed
operator H0 = -1/2 d^2/dy^2 - B^2 y^2/8 on the rescaled clock tau. Each
eigenmode then just picks up exp(-i K_n tau(t)), plus a global phase from
any position-independent potential V(t).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .potentials import Potential
from .specfun import KummerMode, eigenmode_function, find_eigenvalues
from .walls import WallLaw, check_separability, eval_wall, tau_clock

NORM_TOL = 1e-10


class DomainError(ValueError):
    """Position outside the box [0, L(t)]."""


def to_fixed_domain(psi, y, L, Ldot):
    """phi(y) from samples of Psi at x = y L (inverse of :func:`from_fixed_domain`)."""
    y = np.asarray(y, dtype=float)
    return np.asarray(psi) * np.sqrt(L / 2.0) * np.exp(-0.5j * L * Ldot * y ** 2)


def from_fixed_domain(phi, y, L, Ldot):
    """Psi(x = y L) = sqrt(2/L) exp(i L L' y^2 / 2) phi(y)."""
    y = np.asarray(y, dtype=float)
    return np.sqrt(2.0 / L) * np.exp(0.5j * L * Ldot * y ** 2) * np.asarray(phi)


@dataclass(frozen=True)
class ExactState:
    """Superposition of Kummer modes evolving exactly under a separable wall."""

    modes: tuple[KummerMode, ...]
    amplitudes: np.ndarray
    law: WallLaw
    potential: Potential = field(default_factory=Potential.none)
    horizon: float | None = None

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "amplitudes", amps)
        amps.setflags(write=False)
        if len(self.modes) != amps.shape[0] or not self.modes:
            raise ValueError("need one amplitude per mode")
        total = float(np.sum(np.abs(amps) ** 2))
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"initial amplitudes must be normalized, sum |c|^2 = {total:.15g}")
        if not self.potential.position_independent:
            raise ValueError(f"exact solutions need a position-independent potential, got {self.potential.kind!r}")
        b2 = {m.b_squared for m in self.modes}
        if len(b2) != 1:
            raise ValueError("all modes must share one B")
        horizon = self.horizon if self.horizon is not None else self.law.horizon
        if np.isinf(horizon):
            horizon = 1.0
        report = check_separability(self.law, self.potential, horizon)
        if not report.separable:
            raise ValueError(f"wall law is not separable ({report.reason}, residual {report.constraint_residual:.3e})")
        (mb2,) = b2
        if abs(report.b_squared - mb2) > 1e-8 * max(1.0, abs(mb2)):
            raise ValueError(f"wall B^2 = {report.b_squared:.12g} does not match modes' B^2 = {mb2:.12g}")

    @classmethod
    def from_law(cls, law: WallLaw, indices: Sequence[int], amplitudes=None,
                 potential: Potential | None = None, horizon: float | None = None):
        """Build a state from mode indices, solving for the eigenmodes of ``law``."""
        potential = potential or Potential.none()
        h = horizon if horizon is not None else law.horizon
        report = check_separability(law, potential, 1.0 if np.isinf(h) else h)
        if not report.separable:
            raise ValueError(f"wall law is not separable ({report.reason})")
        all_modes = find_eigenvalues(report.B, max(indices))
        modes = [all_modes[i - 1] for i in indices]
        if amplitudes is None:
            amplitudes = np.ones(len(indices)) / np.sqrt(len(indices))
        return cls(tuple(modes), np.asarray(amplitudes, dtype=complex), law, potential, horizon)

    @property
    def b_squared(self) -> float:
        return self.modes[0].b_squared

    @property
    def energies(self) -> np.ndarray:
        return np.array([m.K for m in self.modes])

    def coefficients(self, t):
        """c_n(t) = c_n(0) exp(-i K_n tau(t) - i int V); shape (..., n_modes)."""
        t = np.asarray(t, dtype=float)
        tau = np.asarray(tau_clock(self.law, t))
        vint = np.asarray(self.potential.time_integral(t)) if self.potential.kind != "none" else 0.0
        ph = np.exp(-1j * (tau[..., None] * self.energies + np.asarray(vint)[..., None]))
        return self.amplitudes * ph


def mode_phase(mode: KummerMode, law: WallLaw, potential: Potential, t):
    """exp(-i K_n tau(t) - i int_0^t V(s) ds)."""
    if not potential.position_independent:
        raise ValueError("mode_phase is defined for position-independent potentials")
    vint = potential.time_integral(t) if potential.kind != "none" else 0.0
    return np.exp(-1j * (mode.K * np.asarray(tau_clock(law, t)) + vint))


def evaluate_phi(state: ExactState, y, t):
    """Fixed-domain wavefunction on the transform's scale (integral |phi|^2 = 1/2)."""
    y = np.asarray(y, dtype=float)
    c = state.coefficients(t)
    out = np.zeros(y.shape, dtype=complex)
    for cn, mode in zip(c, state.modes):
        out += cn * eigenmode_function(mode, y)
    return out / np.sqrt(2.0)


def evaluate_psi(state: ExactState, x, t):
    """Psi(x, t) for 0 <= x <= L(t)."""
    x = np.asarray(x, dtype=float)
    L, Ld, _ = eval_wall(state.law, t)
    if np.any(x < 0) or np.any(x > L * (1 + 1e-12)):
        raise DomainError(f"x outside [0, L(t)] = [0, {L}]")
    y = np.clip(x / L, 0.0, 1.0)
    out = from_fixed_domain(evaluate_phi(state, y, t), y, L, Ld)
    return complex(out) if out.ndim == 0 else out


def ground_state(law: WallLaw, horizon: float | None = None) -> ExactState:
    return ExactState.from_law(law, [1], horizon=horizon)
