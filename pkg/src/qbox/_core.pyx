# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: Kummer power series and the Dormand-Prince sine-basis stepper.

Both functions mirror :mod:`qbox._fallback` exactly (same stopping rules,
same step controller), so the two backends agree to rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, sqrt, fabs, hypot, pow, M_PI

cnp.import_array()

cdef double EPS = 2.220446049250313e-16


cdef inline double cmod(double complex z) noexcept nogil:
    return hypot(z.real, z.imag)


cdef inline double complex cexp_(double complex z) noexcept nogil:
    cdef double r = exp(z.real)
    return r * cos(z.imag) + 1j * (r * sin(z.imag))


cdef int _kummer_point(double complex a, double complex b, double complex z,
                       int max_terms, double complex* value,
                       double* err) noexcept nogil:
    cdef double complex pref = 1.0
    cdef double complex term = 1.0
    cdef double complex total = 1.0
    cdef double absum = 1.0, wsum = 1.0, at, ratio
    cdef int k, quiet = 0, converged = 0
    if z.real < 0.0:
        # Kummer transformation keeps the series free of sign cancellation for Re z < 0
        pref = cexp_(z)
        a = b - a
        z = -z
    for k in range(max_terms):
        term = term * (a + k) * z / ((b + k) * (k + 1.0))
        total = total + term
        at = cmod(term)
        absum += at
        wsum += sqrt(k + 1.0) * at
        if at == 0.0:
            converged = 1
            break
        ratio = cmod(a + (k + 1.0)) * cmod(z) / (cmod(b + (k + 1.0)) * (k + 2.0))
        if ratio < 0.5 and at <= 1e-17 * (cmod(total) + 1e-16 * absum):
            quiet += 1
            if quiet >= 3:
                converged = 1
                break
        else:
            quiet = 0
    value[0] = pref * total
    err[0] = EPS * cmod(pref) * (2.0 * absum + 2.0 * wsum) + EPS * cmod(value[0])
    return converged


def kummer_series(const double complex[::1] a, const double complex[::1] b,
                  const double complex[::1] z, int max_terms=20000):
    """Elementwise M(a, b, z) by the Taylor series; returns (value, err, converged)."""
    cdef Py_ssize_t n = a.shape[0], i
    out = np.empty(n, dtype=np.complex128)
    err = np.empty(n, dtype=np.float64)
    ok = np.empty(n, dtype=np.bool_)
    cdef double complex[::1] out_v = out
    cdef double[::1] err_v = err
    cdef cnp.npy_bool[::1] ok_v = ok
    with nogil:
        for i in range(n):
            ok_v[i] = _kummer_point(a[i], b[i], z[i], max_terms, &out_v[i], &err_v[i])
    return out, err, ok


# ---------------------------------------------------------------------------
# Galerkin stepper

cdef struct Model:
    int n
    int wall_kind          # 0 constant, 1 sqrt-quadratic, 2 oscillating
    double w0, w1, w2, w3  # constant: L0 | sqrt-quad: alpha, beta, gamma | osc: L0, a, omega0, phase
    double eps_lin, om_lin, ph_lin
    double eps_quad, om_quad, ph_quad
    double v0, v1, om_v, ph_v
    const double* I1
    const double* I2
    const double* kin


cdef inline void _wall(const Model* m, double t, double* L, double* Ldd) noexcept nogil:
    cdef double q, qd, Ld, c
    if m.wall_kind == 0:
        L[0] = m.w0
        Ldd[0] = 0.0
    elif m.wall_kind == 1:
        q = (m.w0 * t + m.w1) * t + m.w2
        qd = 2.0 * m.w0 * t + m.w1
        L[0] = sqrt(q)
        Ld = qd / (2.0 * L[0])
        Ldd[0] = (m.w0 - Ld * Ld) / L[0]
    else:
        c = cos(m.w2 * t + m.w3)
        L[0] = m.w0 + m.w1 * c
        Ldd[0] = -m.w1 * m.w2 * m.w2 * c


cdef void _rhs(const Model* m, double t, const double* y, double* out) noexcept nogil:
    # y, out: interleaved (re, im) pairs of length 2n
    cdef double L, Ldd, L2, L3, cq, cl, cv, sr, si, re, im, a
    cdef Py_ssize_t i, j, n = m.n
    cdef const double* r1
    cdef const double* r2
    _wall(m, t, &L, &Ldd)
    L2 = L * L
    L3 = L2 * L
    cq = L3 * Ldd
    if m.eps_quad != 0.0:
        cq += 2.0 * m.eps_quad * L2 * L2 * cos(m.om_quad * t + m.ph_quad)
    cl = 0.0
    if m.eps_lin != 0.0:
        cl = 2.0 * m.eps_lin * L3 * cos(m.om_lin * t + m.ph_lin)
    cv = L2 * (m.v0 + m.v1 * cos(m.om_v * t + m.ph_v))
    for i in range(n):
        sr = 0.0
        si = 0.0
        r1 = m.I1 + i * n
        r2 = m.I2 + i * n
        if cl != 0.0:
            for j in range(n):
                a = cq * r1[j] + cl * r2[j]
                sr += a * y[2 * j]
                si += a * y[2 * j + 1]
        elif cq != 0.0:
            for j in range(n):
                sr += r1[j] * y[2 * j]
                si += r1[j] * y[2 * j + 1]
            sr *= cq
            si *= cq
        re = (m.kin[i] + cv) * y[2 * i] + sr
        im = (m.kin[i] + cv) * y[2 * i + 1] + si
        # -i/L^2 * (re + i im)
        out[2 * i] = im / L2
        out[2 * i + 1] = -re / L2


cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0, A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0, B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0, E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0
cdef double C2 = 0.2, C3 = 0.3, C4 = 0.8, C5 = 8.0 / 9.0


def dopri_propagate(const double complex[::1] c0, double t0, const double[::1] t_out,
                    const double[:, ::1] I1, const double[:, ::1] I2,
                    const double[::1] kin, int wall_kind, const double[::1] wall,
                    const double[::1] drive, double rtol, double atol, double h0,
                    long max_steps):
    """Integrate the sine-basis system with DOPRI5, landing exactly on ``t_out``.

    Returns ``(coeffs, status, stats)`` where status is 0 on success, 1 on
    step-size underflow and 2 when ``max_steps`` is exhausted; ``coeffs`` rows
    past the failure point are left as NaN.
    """
    cdef Py_ssize_t n = c0.shape[0], n_out = t_out.shape[0], i, j = 0, n2 = 2 * c0.shape[0]
    cdef Model m
    m.n = <int>n
    m.wall_kind = wall_kind
    m.w0 = wall[0]; m.w1 = wall[1]; m.w2 = wall[2]; m.w3 = wall[3]
    m.eps_lin = drive[0]; m.om_lin = drive[1]; m.ph_lin = drive[2]
    m.eps_quad = drive[3]; m.om_quad = drive[4]; m.ph_quad = drive[5]
    m.v0 = drive[6]; m.v1 = drive[7]; m.om_v = drive[8]; m.ph_v = drive[9]
    m.I1 = &I1[0, 0]
    m.I2 = &I2[0, 0]
    m.kin = &kin[0]

    coeffs = np.full((n_out, n2), np.nan, dtype=np.float64)
    cdef double[:, ::1] cv = coeffs
    work = np.zeros((10, n2), dtype=np.float64)
    cdef double[:, ::1] w = work
    cdef double* y = &w[0, 0]
    cdef double* k1 = &w[1, 0]
    cdef double* k2 = &w[2, 0]
    cdef double* k3 = &w[3, 0]
    cdef double* k4 = &w[4, 0]
    cdef double* k5 = &w[5, 0]
    cdef double* k6 = &w[6, 0]
    cdef double* k7 = &w[7, 0]
    cdef double* ys = &w[8, 0]
    cdef double* ynew = &w[9, 0]
    cdef double* tmp

    cdef double t = t0, h = h0, h_eff, t_target, errn, sc, er, ei, fac, ay, an
    cdef long steps = 0, accepted = 0, rejected = 0, nfev = 0
    cdef int status = 0, clamped
    for i in range(n):
        y[2 * i] = c0[i].real
        y[2 * i + 1] = c0[i].imag

    with nogil:
        while j < n_out and t_out[j] <= t:
            for i in range(n2):
                cv[j, i] = y[i]
            j += 1
        _rhs(&m, t, y, k1)
        nfev += 1
        while j < n_out:
            if steps >= max_steps:
                status = 2
                break
            t_target = t_out[j]
            h_eff = h
            clamped = 0
            if t + h_eff >= t_target:
                h_eff = t_target - t
                clamped = 1
            if h_eff < 1e-14 * (fabs(t) + 1.0) and not clamped:
                status = 1
                break
            steps += 1
            for i in range(n2):
                ys[i] = y[i] + h_eff * A21 * k1[i]
            _rhs(&m, t + C2 * h_eff, ys, k2)
            for i in range(n2):
                ys[i] = y[i] + h_eff * (A31 * k1[i] + A32 * k2[i])
            _rhs(&m, t + C3 * h_eff, ys, k3)
            for i in range(n2):
                ys[i] = y[i] + h_eff * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            _rhs(&m, t + C4 * h_eff, ys, k4)
            for i in range(n2):
                ys[i] = y[i] + h_eff * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            _rhs(&m, t + C5 * h_eff, ys, k5)
            for i in range(n2):
                ys[i] = y[i] + h_eff * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            _rhs(&m, t + h_eff, ys, k6)
            for i in range(n2):
                ynew[i] = y[i] + h_eff * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            _rhs(&m, t + h_eff, ynew, k7)
            nfev += 6
            errn = 0.0
            for i in range(n):
                er = h_eff * (E1 * k1[2 * i] + E3 * k3[2 * i] + E4 * k4[2 * i] + E5 * k5[2 * i]
                              + E6 * k6[2 * i] + E7 * k7[2 * i])
                ei = h_eff * (E1 * k1[2 * i + 1] + E3 * k3[2 * i + 1] + E4 * k4[2 * i + 1]
                              + E5 * k5[2 * i + 1] + E6 * k6[2 * i + 1] + E7 * k7[2 * i + 1])
                ay = hypot(y[2 * i], y[2 * i + 1])
                an = hypot(ynew[2 * i], ynew[2 * i + 1])
                sc = atol + rtol * (ay if ay > an else an)
                er = hypot(er, ei) / sc
                errn += er * er
            errn = sqrt(errn / n)
            if errn <= 1.0:
                accepted += 1
                t = t_target if clamped else t + h_eff
                tmp = y
                y = ynew
                ynew = tmp
                tmp = k1
                k1 = k7
                k7 = tmp
                fac = 5.0 if errn == 0.0 else 0.9 * pow(errn, -0.2)
                if fac > 5.0:
                    fac = 5.0
                if fac < 0.2:
                    fac = 0.2
                if clamped:
                    if h_eff * fac > h:
                        h = h_eff * fac
                    for i in range(n2):
                        cv[j, i] = y[i]
                    j += 1
                    while j < n_out and t_out[j] <= t:
                        for i in range(n2):
                            cv[j, i] = y[i]
                        j += 1
                else:
                    h = h_eff * fac
            else:
                rejected += 1
                fac = 0.9 * pow(errn, -0.2)
                if fac < 0.2:
                    fac = 0.2
                h = h_eff * fac

    stats = {"steps": steps, "accepted": accepted, "rejected": rejected,
             "nfev": nfev, "t_reached": t}
    return coeffs.view(np.complex128), status, stats
