"""Confluent hypergeometric function M(a, b, z) and the Kummer eigenmodes of the box.

The eigenmodes solve ``-1/2 Phi'' - (B^2/8) y^2 Phi = K Phi`` on ``[0, 1]`` with
Dirichlet ends. For ``B != 0`` they are

    Phi(y) = C y M((3iB - 4K)/(4iB), 3/2, iB y^2/2) exp(-iB y^2/4),

and the eigenvalues are the zeros in ``K`` of the same expression at ``y = 1``.
``B`` may be real (``B^2 > 0``, inverted oscillator) or purely imaginary
(``B^2 < 0``, confining oscillator); the mode depends only on ``B^2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
import numpy as np
from scipy.optimize import brentq

from . import _backend

#: Largest |z| accepted by :func:`kummer_m`.
Z_MAX = 60.0
#: Largest number of eigenmodes :func:`find_eigenvalues` will return.
N_MAX_CAP = 128

EIGEN_XTOL = 1e-12
BOUNDARY_TOL = 1e-8


class KummerDomainError(ValueError):
    """``b`` is a non-positive integer (pole of M)."""


class KummerRangeError(ValueError):
    """``|z|`` exceeds :data:`Z_MAX`."""


class EigenvalueError(RuntimeError):
    """A quantization root could not be bracketed or refined."""

    def __init__(self, n, message):
        super().__init__(f"mode n={n}: {message}")
        self.n = n


def _check_args(b, z):
    bb = np.asarray(b, dtype=complex)
    bad = (bb.imag == 0) & (bb.real <= 0) & (bb.real == np.round(bb.real))
    if np.any(bad):
        raise KummerDomainError(f"b must not be a non-positive integer, got {bb[bad].ravel()[0].real:g}")
    zz = np.abs(np.asarray(z, dtype=complex))
    if np.any(zz > Z_MAX):
        raise KummerRangeError(f"|z| = {zz.max():g} exceeds supported bound {Z_MAX:g}")


def _series_mp(a, b, z, prec, max_terms=100000):
    """Taylor series of M in ``prec``-bit arithmetic (escalation path).

    Returns the value and the magnitude sum of the terms times the Kummer
    prefactor, which bounds the cancellation the precision had to absorb.
    """
    with gmpy2.context(gmpy2.get_context(), precision=int(prec)):
        a = gmpy2.mpc(complex(a))
        b = gmpy2.mpc(complex(b))
        z = gmpy2.mpc(complex(z))
        pref = gmpy2.mpc(1)
        if z.real < 0:
            pref = gmpy2.exp(z)
            a, z = b - a, -z
        term = gmpy2.mpc(1)
        total = gmpy2.mpc(1)
        absum = gmpy2.mpfr(1)
        tol = gmpy2.mpfr(2) ** (-int(prec) - 4)
        zabs = abs(z)
        quiet = 0
        for k in range(max_terms):
            term = term * (a + k) * z / ((b + k) * (k + 1))
            total += term
            at = abs(term)
            absum += at
            if at == 0:
                break
            ratio = abs(a + k + 1) * zabs / (abs(b + k + 1) * (k + 2))
            if ratio < 0.5 and at <= tol * (abs(total) + tol * absum):
                quiet += 1
                if quiet >= 3:
                    break
            else:
                quiet = 0
        return complex(pref * total), float(abs(pref) * absum)


def _evaluate(a, b, z, rtol, atol, scale=None):
    """Broadcast evaluation with escalation where the double-precision bound is too loose.

    ``scale`` multiplies the value before the absolute test, so callers can
    demand an absolute accuracy on a derived quantity such as ``C y M``.
    """
    a, b, z = np.broadcast_arrays(np.asarray(a, dtype=complex),
                                  np.asarray(b, dtype=complex),
                                  np.asarray(z, dtype=complex))
    shape = a.shape
    af, bf, zf = (np.ascontiguousarray(v.ravel()) for v in (a, b, z))
    val, err, ok = _backend.kummer_series(af, bf, zf)
    val = np.asarray(val)
    err = np.asarray(err)
    ok = np.asarray(ok, dtype=bool)
    s = np.ones(val.shape) if scale is None else np.abs(np.broadcast_to(scale, shape).ravel())
    target = np.maximum(rtol * np.abs(val) * s, atol)
    need = ~ok | (err * s > target)
    for i in np.flatnonzero(need):
        # the double-precision value may be garbage, so the first guess can
        # be short; re-run if the observed cancellation says so
        prec = 53 + 24 + min(math.log2(max(err[i] * s[i] / max(target[i], 1e-300), 1.0)), 4000.0)
        for _ in range(4):
            v, absum = _series_mp(af[i], bf[i], zf[i], prec)
            goal = max(rtol * abs(v) * s[i], atol, 1e-300)
            needed = math.log2(max(absum * s[i] / goal, 1.0)) + 24
            if needed <= prec:
                break
            prec = needed + 16
        val[i] = v
    return val.reshape(shape)


def kummer_m(a, b, z, rtol=1e-13):
    """Kummer's function M(a, b, z) = sum (a)_k z^k / ((b)_k k!).

    Accepts scalars or broadcastable arrays. The double-precision series is
    recomputed in extended precision wherever its rounding bound exceeds
    ``rtol`` relative, so results are accurate to ``rtol`` (default 1e-13)
    throughout ``|z| <= Z_MAX``.
    """
    _check_args(b, z)
    out = _evaluate(a, b, z, rtol, 0.0)
    return complex(out) if out.ndim == 0 else out


def kummer_m_deriv(a, b, z, rtol=1e-13):
    """dM/dz = (a/b) M(a+1, b+1, z)."""
    _check_args(b, z)
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = (a / b) * _evaluate(a + 1, b + 1, z, rtol, 0.0)
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# eigenmodes


def _sqrt_b2(b_squared):
    return complex(np.sqrt(complex(b_squared)))


@dataclass(frozen=True)
class KummerMode:
    """One Dirichlet eigenpair of ``-1/2 d^2/dy^2 - (B^2/8) y^2`` on ``[0, 1]``."""

    n: int
    K: float
    b_squared: float
    norm_constant: float

    @property
    def B(self) -> complex:
        return _sqrt_b2(self.b_squared)

    @property
    def a(self) -> complex:
        """First Kummer parameter (3iB - 4K)/(4iB)."""
        B = self.B
        return (3j * B - 4 * self.K) / (4j * B)

    @property
    def W(self) -> complex:
        return 3j * self.B - 4 * self.K

    def __call__(self, y):
        return eigenmode_function(self, y)


def eigenmode_function(mode: KummerMode, y, atol=1e-13):
    """Phi_n(y), normalized on [0, 1] with Phi_n'(0) real positive."""
    y = np.asarray(y, dtype=float)
    if mode.b_squared == 0.0:
        out = mode.norm_constant * np.sin(mode.n * np.pi * y) + 0j
    else:
        out = mode.norm_constant * _raw_mode(mode.K, mode.B, y, atol / mode.norm_constant)
    return complex(out) if out.ndim == 0 else out


def eigenmode_derivative(mode: KummerMode, y, atol=1e-12):
    """dPhi_n/dy using dM/dz = (a/b) M(a+1, b+1, z)."""
    y = np.asarray(y, dtype=float)
    C = mode.norm_constant
    if mode.b_squared == 0.0:
        out = C * mode.n * np.pi * np.cos(mode.n * np.pi * y) + 0j
    else:
        M, Mp = _mode_kummer_pair(mode, y, atol / C)
        B = mode.B
        gauss = np.exp(-0.25j * B * y ** 2)
        out = C * gauss * (M + (mode.W / 6) * y ** 2 * Mp - 0.5j * B * y ** 2 * M)
    return complex(out) if out.ndim == 0 else out


def _mode_kummer_pair(mode, y, atol):
    """M(a, 3/2, z) and M(a+1, 5/2, z) at z = iB y^2/2."""
    B = mode.B
    z = 0.5j * B * y ** 2
    gauss = np.abs(np.exp(-0.25j * B * y ** 2))
    M = _evaluate(mode.a, 1.5, z, 1e-12, atol, scale=gauss)
    Mp = _evaluate(mode.a + 1, 2.5, z, 1e-12, atol, scale=gauss * np.maximum(y, 1e-3) ** 2 * abs(mode.W))
    return M, Mp


def _raw_mode(K, B, y, atol):
    """Unnormalized y M(a, 3/2, iB y^2/2) exp(-iB y^2/4)."""
    a = (3j * B - 4 * K) / (4j * B)
    gauss = np.exp(-0.25j * B * y ** 2)
    M = _evaluate(a, 1.5, 0.5j * B * y ** 2, 1e-12, atol, scale=np.abs(y * gauss))
    return y * M * gauss


def quantization_residual(K, B, atol=1e-15):
    """exp(-iB/4) M((3iB-4K)/(4iB), 3/2, iB/2), real for real eigen-K up to rounding."""
    B = complex(B)
    a = (3j * B - 4 * K) / (4j * B)
    z = 0.5j * B
    return complex(np.exp(-0.5 * z) * _evaluate(a, 1.5, z, 1e-13, atol))


def _normalize(K, B, n):
    nodes = 8 * n + 64
    prev = None
    for _ in range(8):
        x, w = np.polynomial.legendre.leggauss(nodes)
        y = 0.5 * (x + 1.0)
        # raw amplitude scales like 1/n, so the absolute target follows it
        f = _raw_mode(K, B, y, 2e-15 / n)
        val = 0.5 * np.sum(w * np.abs(f) ** 2)
        if prev is not None and abs(val - prev) <= 1e-11 * val:
            return 1.0 / math.sqrt(val)
        prev = val
        nodes = (3 * nodes) // 2
    raise EigenvalueError(n, "normalization quadrature did not converge")


def _validate_b(B):
    Bc = complex(B)
    if Bc.imag != 0 and Bc.real != 0:
        raise ValueError(f"B must be real or purely imaginary, got {B!r}")
    if Bc.imag == 0 and Bc.real < 0:
        raise ValueError(f"real B must be >= 0, got {Bc.real:g}")
    return Bc


def find_eigenvalues(B, n_max: int) -> list[KummerMode]:
    """The ``n_max`` lowest Dirichlet eigenmodes of the fixed-domain operator.

    ``B`` is the separability constant (``B^2 = -4 L^3 L''``); pass a purely
    imaginary value for walls with ``L'' > 0``. Results are cached.
    """
    Bc = _validate_b(B)
    n_max = int(n_max)
    if not 1 <= n_max <= N_MAX_CAP:
        raise ValueError(f"n_max must be in [1, {N_MAX_CAP}], got {n_max}")
    return list(_find_eigenvalues(Bc, n_max))


@lru_cache(maxsize=64)
def _find_eigenvalues(Bc: complex, n_max: int) -> tuple[KummerMode, ...]:
    b2 = (Bc * Bc).real
    if b2 == 0.0:
        return tuple(KummerMode(n, 0.5 * (np.pi * n) ** 2, 0.0, math.sqrt(2.0))
                     for n in range(1, n_max + 1))
    # Pointwise bounds of the potential -B^2 y^2/8 on [0, 1] bracket each level
    # around its free-box value.
    shift_lo = max(b2, 0.0) / 8.0
    shift_hi = max(-b2, 0.0) / 8.0
    pad = 1e-9 + 1e-12 * (np.pi * n_max) ** 2

    def g(K):
        return quantization_residual(K, Bc).real

    modes = []
    for n in range(1, n_max + 1):
        free = 0.5 * (np.pi * n) ** 2
        lo, hi = free - shift_lo - pad, free + shift_hi + pad
        if modes:
            lo = max(lo, modes[-1].K + pad)
        if n < n_max:
            hi = min(hi, 0.5 * (np.pi * (n + 1)) ** 2 - shift_lo - pad)
        if hi <= lo:
            raise EigenvalueError(n, f"bracket collapsed ({lo:g}, {hi:g}); |B^2| too large")
        step = min(np.pi ** 2, hi - lo) / 8.0
        grid = np.append(np.arange(lo, hi, step), hi)
        vals = np.array([g(K) for K in grid])
        flips = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)
        if flips.size != 1:
            raise EigenvalueError(n, f"expected one sign change in [{lo:g}, {hi:g}], found {flips.size}")
        i = flips[0]
        if vals[i] == 0.0:
            K = grid[i]
        else:
            K = brentq(g, grid[i], grid[i + 1], xtol=EIGEN_XTOL, rtol=4 * np.finfo(float).eps,
                       maxiter=200)
        resid = quantization_residual(K, Bc)
        if abs(resid.imag) > 1e-8 * max(1.0, abs(resid)) + 1e-10:
            warnings.warn(f"mode n={n}: quantization residual has imaginary part "
                          f"{resid.imag:.3e}; possible complex eigenvalue", RuntimeWarning)
        C = _normalize(K, Bc, n)
        if C * abs(resid) > BOUNDARY_TOL:
            raise EigenvalueError(n, f"boundary value {C * abs(resid):.3e} exceeds {BOUNDARY_TOL:g}")
        modes.append(KummerMode(n, float(K), float(b2), float(C)))
    return tuple(modes)
