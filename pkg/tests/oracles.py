"""Independent reference computations used by the tests.

None of these share code with the package: the eigen-oracle is a
finite-difference matrix, the Kummer oracle is a plain mpmath series, and
the moving-box oracle is a Crank-Nicolson solver of the untransformed
equation in the stretched coordinate.
"""

import math

import mpmath
import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal, solve_banded


# -- Kummer series ------------------------------------------------------------

def kummer_mp(a, b, z, prec=212, terms=None):
    """M(a, b, z) as a direct series in mpmath at ``prec`` bits.

    Stops once a term drops below 2**-(2*prec) of the sum, then keeps going
    for as many terms again (the doubled truncation depth).
    """
    with mpmath.workprec(prec):
        a, b, z = mpmath.mpc(a), mpmath.mpc(b), mpmath.mpc(z)
        term = mpmath.mpc(1)
        total = mpmath.mpc(1)
        k = 0
        stop_at = None
        eps = mpmath.mpf(2) ** (-2 * prec)
        while True:
            term *= (a + k) * z / ((b + k) * (k + 1))
            total += term
            k += 1
            if stop_at is None and abs(term) <= eps * abs(total) and k > abs(a * z):
                stop_at = 2 * k
            if stop_at is not None and k >= stop_at:
                break
            if terms is not None and k >= terms:
                break
        return complex(total)


# -- finite-difference eigensolver ----------------------------------------------

def fd_levels(b_squared, n_max, intervals):
    """Lowest Dirichlet eigenpairs of -1/2 d^2/dy^2 - (B^2/8) y^2 on [0, 1]."""
    h = 1.0 / intervals
    y = h * np.arange(1, intervals)
    diag = 1.0 / h ** 2 - b_squared / 8.0 * y ** 2
    off = np.full(intervals - 2, -0.5 / h ** 2)
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_max - 1))
    # unit L2 norm on [0, 1] and positive slope at y = 0
    v = v / math.sqrt(h)
    v = v * np.sign(v[0])
    return w, y, v


def fd_eigenvalues(b_squared, n_max, intervals=8192):
    """Richardson-extrapolated levels from grids ``intervals`` and ``intervals/2``."""
    fine, _, _ = fd_levels(b_squared, n_max, intervals)
    coarse, _, _ = fd_levels(b_squared, n_max, intervals // 2)
    return (4 * fine - coarse) / 3


def fd_mode_value(b_squared, n, y0, intervals=8192):
    """Eigenvector n (1-based) at a grid point y0, Richardson-extrapolated."""
    vals = []
    for m in (intervals, intervals // 2):
        _, y, v = fd_levels(b_squared, n, m)
        i = int(round(y0 * m)) - 1
        assert abs(y[i] - y0) < 1e-12
        vals.append(v[i, n - 1])
    return (4 * vals[0] - vals[1]) / 3


def perturbative_level(B, n):
    """First-order level with normalized sine modes: <y^2> = 1/3 - 1/(2 pi^2 n^2)."""
    return 0.5 * (math.pi * n) ** 2 - B * B / 8 * (1 / 3 - 1 / (2 * math.pi ** 2 * n ** 2))


# -- matrix elements by quadrature ------------------------------------------------

def sine_integral(power, n, m):
    """int_0^1 y^power sin(n pi y) sin(m pi y) dy by adaptive quadrature."""
    f = lambda y: y ** power * math.sin(n * math.pi * y) * math.sin(m * math.pi * y)
    val, _ = quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-14, limit=400)
    return val


# -- Crank-Nicolson for the moving box ---------------------------------------------

def crank_nicolson(psi0, wall, potential, t_end, dt, intervals):
    """Propagate Psi on [0, L(t)] in the stretched coordinate y = x/L.

    With psi(y, t) = Psi(y L, t) the equation is

        i psi_t = -1/(2 L^2) psi_yy + i (L'/L) y psi_y + V(y L, t) psi.

    ``wall(t)`` returns (L, L'); ``potential(x, t)`` the potential;
    ``psi0`` the interior samples at t = 0. Returns (y, psi(t_end)).
    """
    h = 1.0 / intervals
    y = h * np.arange(1, intervals)
    psi = np.asarray(psi0, dtype=complex).copy()
    steps = int(round(t_end / dt))
    for k in range(steps):
        tm = (k + 0.5) * dt
        L, Ld = wall(tm)
        diag = 1.0 / (L * L * h * h) + potential(y * L, tm)
        kin = -0.5 / (L * L * h * h)
        adv = 1j * Ld / L * y / (2 * h)
        upper = kin + adv[:-1]  # coefficient of psi_{j+1} in row j
        lower = kin - adv[1:]   # coefficient of psi_{j-1} in row j
        Apsi = diag * psi
        Apsi[:-1] += upper * psi[1:]
        Apsi[1:] += lower * psi[:-1]
        rhs = psi - 0.5j * dt * Apsi
        ab = np.zeros((3, y.size), dtype=complex)
        ab[0, 1:] = 0.5j * dt * upper
        ab[1] = 1 + 0.5j * dt * diag
        ab[2, :-1] = 0.5j * dt * lower
        psi = solve_banded((1, 1), ab, rhs)
    return y, psi


# -- kinetic energy by grid differentiation -----------------------------------------

def grid_energy(psi_fine, L):
    """1/2 int_0^L |Psi_x|^2 from samples on 2m+1 uniform points including both ends.

    Differences between neighbours are central differences at the interval
    midpoints (second order); the coarse grid uses every other sample and the
    two are combined by Richardson extrapolation.
    """
    psi_fine = np.asarray(psi_fine)
    def energy(v):
        h = L / (v.size - 1)
        return 0.5 * np.sum(np.abs(np.diff(v)) ** 2) / h
    return (4 * energy(psi_fine) - energy(psi_fine[::2])) / 3


def moving_wall_psi(phi, y, L, Ld):
    """Psi at x = y L from the fixed-domain phi (Psi = sqrt(2/L) exp(i L L' y^2/2) phi)."""
    return math.sqrt(2.0 / L) * np.exp(0.5j * L * Ld * y * y) * phi
