"""Pure-Python (NumPy) versions of the kernels in ``_core.pyx``.

Same algorithms and stopping rules as the compiled module; used when the
extension is unavailable or ``QBOX_BACKEND=python`` is set.
"""

import numpy as np

EPS = np.finfo(float).eps

# Dormand-Prince 5(4) tableau
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_C = (0.0, 0.2, 0.3, 0.8, 8 / 9, 1.0)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def kummer_series(a, b, z, max_terms=20000):
    """Elementwise M(a, b, z) by the Taylor series; returns (value, err, converged)."""
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex)
    z = np.array(z, dtype=complex)
    pref = np.ones_like(z)
    neg = z.real < 0
    pref[neg] = np.exp(z[neg])
    a[neg] = b[neg] - a[neg]
    z[neg] = -z[neg]

    n = z.shape[0]
    term = np.ones(n, dtype=complex)
    total = np.ones(n, dtype=complex)
    absum = np.ones(n)
    wsum = np.ones(n)
    quiet = np.zeros(n, dtype=int)
    done = np.zeros(n, dtype=bool)
    active = np.arange(n)
    for k in range(max_terms):
        if active.size == 0:
            break
        aa, bb, zz = a[active], b[active], z[active]
        term[active] *= (aa + k) * zz / ((bb + k) * (k + 1.0))
        total[active] += term[active]
        at = np.abs(term[active])
        absum[active] += at
        wsum[active] += np.sqrt(k + 1.0) * at
        ratio = np.abs(aa + (k + 1.0)) * np.abs(zz) / (np.abs(bb + (k + 1.0)) * (k + 2.0))
        small = (ratio < 0.5) & (at <= 1e-17 * (np.abs(total[active]) + 1e-16 * absum[active]))
        quiet[active] = np.where(small, quiet[active] + 1, 0)
        finished = (at == 0.0) | (quiet[active] >= 3)
        done[active[finished]] = True
        active = active[~finished]
    value = pref * total
    err = EPS * np.abs(pref) * (2.0 * absum + 2.0 * wsum) + EPS * np.abs(value)
    return value, err, done


def _wall(kind, w, t):
    if kind == 0:
        return w[0], 0.0
    if kind == 1:
        q = (w[0] * t + w[1]) * t + w[2]
        L = np.sqrt(q)
        Ld = (2.0 * w[0] * t + w[1]) / (2.0 * L)
        return L, (w[0] - Ld * Ld) / L
    c = np.cos(w[2] * t + w[3])
    return w[0] + w[1] * c, -w[1] * w[2] * w[2] * c


def make_rhs(I1, I2, kin, wall_kind, wall, drive):
    """Right-hand side dC/dt for the coded wall/drive families."""
    eps_lin, om_lin, ph_lin, eps_quad, om_quad, ph_quad, v0, v1, om_v, ph_v = drive

    def rhs(t, y):
        L, Ldd = _wall(wall_kind, wall, t)
        L2 = L * L
        cq = L2 * L * Ldd
        if eps_quad != 0.0:
            cq += 2.0 * eps_quad * L2 * L2 * np.cos(om_quad * t + ph_quad)
        cl = 2.0 * eps_lin * L2 * L * np.cos(om_lin * t + ph_lin) if eps_lin != 0.0 else 0.0
        cv = L2 * (v0 + v1 * np.cos(om_v * t + ph_v))
        s = (kin + cv) * y
        if cq != 0.0:
            s = s + cq * (I1 @ y)
        if cl != 0.0:
            s = s + cl * (I2 @ y)
        return -1j * s / L2

    return rhs


def dopri_propagate_rhs(rhs, c0, t0, t_out, rtol, atol, h0, max_steps):
    """DOPRI5 on an arbitrary ``rhs(t, y)``; same contract as the compiled stepper."""
    n = c0.shape[0]
    n_out = t_out.shape[0]
    coeffs = np.full((n_out, n), np.nan + 0j)
    y = np.array(c0, dtype=complex)
    t = float(t0)
    h = float(h0)
    steps = accepted = rejected = nfev = 0
    status = 0
    j = 0
    while j < n_out and t_out[j] <= t:
        coeffs[j] = y
        j += 1
    k1 = rhs(t, y)
    nfev += 1
    k = [k1] + [None] * 6
    while j < n_out:
        if steps >= max_steps:
            status = 2
            break
        t_target = t_out[j]
        h_eff = h
        clamped = False
        if t + h_eff >= t_target:
            h_eff = t_target - t
            clamped = True
        if h_eff < 1e-14 * (abs(t) + 1.0) and not clamped:
            status = 1
            break
        steps += 1
        for s in range(1, 6):
            ys = y + h_eff * sum(_A[s][i] * k[i] for i in range(s))
            k[s] = rhs(t + _C[s] * h_eff, ys)
        ynew = y + h_eff * (_B[0] * k[0] + _B[2] * k[2] + _B[3] * k[3] + _B[4] * k[4] + _B[5] * k[5])
        k[6] = rhs(t + h_eff, ynew)
        nfev += 6
        e = h_eff * (_E[0] * k[0] + _E[2] * k[2] + _E[3] * k[3] + _E[4] * k[4] + _E[5] * k[5] + _E[6] * k[6])
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        errn = np.sqrt(np.mean((np.abs(e) / sc) ** 2))
        if errn <= 1.0:
            accepted += 1
            t = t_target if clamped else t + h_eff
            y = ynew
            k[0] = k[6]
            fac = 5.0 if errn == 0.0 else min(5.0, max(0.2, 0.9 * errn ** -0.2))
            if clamped:
                h = max(h, h_eff * fac)
                coeffs[j] = y
                j += 1
                while j < n_out and t_out[j] <= t:
                    coeffs[j] = y
                    j += 1
            else:
                h = h_eff * fac
        else:
            rejected += 1
            h = h_eff * max(0.2, 0.9 * errn ** -0.2)
    stats = {"steps": steps, "accepted": accepted, "rejected": rejected,
             "nfev": nfev, "t_reached": t}
    return coeffs, status, stats


def dopri_propagate(c0, t0, t_out, I1, I2, kin, wall_kind, wall, drive,
                    rtol, atol, h0, max_steps):
    rhs = make_rhs(np.asarray(I1), np.asarray(I2), np.asarray(kin), wall_kind,
                   np.asarray(wall), tuple(drive))
    return dopri_propagate_rhs(rhs, np.asarray(c0), t0, np.asarray(t_out),
                               rtol, atol, h0, max_steps)
