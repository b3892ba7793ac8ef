# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled geodesic kernels; algorithmic twin of the pure backend."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, exp, sqrt, fabs, pow

cnp.import_array()

BACKEND_NAME = "cython"

cdef double[6] B_W = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192,
                      -2187.0 / 6784, 11.0 / 84]
cdef double[7] E_W = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                      -17253.0 / 339200, 22.0 / 525, -1.0 / 40]
cdef double[5][5] A_W = [
    [1.0 / 5, 0, 0, 0, 0],
    [3.0 / 40, 9.0 / 40, 0, 0, 0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
     -5103.0 / 18656],
]


cdef inline void _jet1(double[::1] kx, double[::1] ky, double[::1] cre,
                       double[::1] cim, double x, double y,
                       double* mu, double* mux, double* muy) noexcept nogil:
    cdef Py_ssize_t i, n = kx.shape[0]
    cdef double ph, cs, sn, m = 0.0, mx = 0.0, my = 0.0
    for i in range(n):
        ph = kx[i] * x + ky[i] * y
        cs = cos(ph)
        sn = sin(ph)
        m += cre[i] * cs - cim[i] * sn
        mx += -kx[i] * (cre[i] * sn + cim[i] * cs)
        my += -ky[i] * (cre[i] * sn + cim[i] * cs)
    mu[0] = m
    mux[0] = mx
    muy[0] = my


cdef inline void _rhs(double[::1] kx, double[::1] ky, double[::1] cre,
                      double[::1] cim, double* y, double* out) noexcept nogil:
    cdef double mu, mux, muy, w, ct, st
    _jet1(kx, ky, cre, cim, y[0], y[1], &mu, &mux, &muy)
    w = exp(-mu)
    ct = cos(y[2])
    st = sin(y[2])
    out[0] = w * ct
    out[1] = w * st
    out[2] = w * (muy * ct - mux * st)


def mu_jet1(kx, ky, cre, cim, double x, double y):
    """(mu, mu_x, mu_y) at a single point."""
    cdef double[::1] a = np.ascontiguousarray(kx, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(ky, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(cre, dtype=np.float64)
    cdef double[::1] d = np.ascontiguousarray(cim, dtype=np.float64)
    cdef double mu, mux, muy
    _jet1(a, b, c, d, x, y, &mu, &mux, &muy)
    return mu, mux, muy


cdef inline double _rms3(double* v, double* sc) noexcept nogil:
    cdef double s = 0.0
    cdef int i
    for i in range(3):
        s += (v[i] / sc[i]) * (v[i] / sc[i])
    return sqrt(s / 3.0)


def integrate(kx, ky, cre, cim, y0, double t0, ts_out,
              double rtol=1e-11, double atol=1e-11):
    """Adaptive DP5(4) integration with exact sampling at ts_out.

    Same contract as the pure backend: returns (ys, n_accepted, n_rejected).
    """
    cdef double[::1] vkx = np.ascontiguousarray(kx, dtype=np.float64)
    cdef double[::1] vky = np.ascontiguousarray(ky, dtype=np.float64)
    cdef double[::1] vcre = np.ascontiguousarray(cre, dtype=np.float64)
    cdef double[::1] vcim = np.ascontiguousarray(cim, dtype=np.float64)
    cdef double[::1] vts = np.ascontiguousarray(ts_out, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out_arr = \
        np.empty((vts.shape[0], 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    cdef double y[3]
    cdef double y_try[3]
    cdef double y_new[3]
    cdef double K[7][3]
    cdef double err_vec[3]
    cdef double sc[3]
    cdef double t, h, h0, h1, direction, target, err, fac
    cdef double d0, d1, d2, acc
    cdef Py_ssize_t idx = 0, nout = vts.shape[0]
    cdef long n_acc = 0, n_rej = 0
    cdef int i, j, stage

    for i in range(3):
        y[i] = y0[i]
    t = t0
    direction = 1.0 if vts[nout - 1] >= t0 else -1.0
    _rhs(vkx, vky, vcre, vcim, y, K[0])

    # initial step size (same heuristic as the pure backend)
    for i in range(3):
        sc[i] = atol + fabs(y[i]) * rtol
    d0 = _rms3(y, sc)
    d1 = _rms3(K[0], sc)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    for i in range(3):
        y_try[i] = y[i] + h0 * direction * K[0][i]
    _rhs(vkx, vky, vcre, vcim, y_try, K[1])
    for i in range(3):
        err_vec[i] = K[1][i] - K[0][i]
    d2 = _rms3(err_vec, sc) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = 1e-6 if 1e-6 > h0 * 1e-3 else h0 * 1e-3
    else:
        h1 = pow(0.01 / (d1 if d1 > d2 else d2), 0.2)
    h = 100 * h0 if 100 * h0 < h1 else h1

    while idx < nout:
        if n_acc + n_rej > 50_000_000:
            raise RuntimeError("step limit exceeded; tolerances too tight?")
        target = vts[idx]
        if (t - target) * direction >= 0.0:
            for i in range(3):
                out[idx, i] = y[i]
            idx += 1
            continue
        if h > fabs(target - t):
            h = fabs(target - t)
        acc = 1e-14 * (1.0 if fabs(t) < 1.0 else fabs(t))
        if h < acc:
            h = acc
        for stage in range(5):
            for i in range(3):
                acc = 0.0
                for j in range(stage + 1):
                    acc += A_W[stage][j] * K[j][i]
                y_try[i] = y[i] + direction * h * acc
            _rhs(vkx, vky, vcre, vcim, y_try, K[stage + 1])
        for i in range(3):
            acc = 0.0
            for j in range(6):
                acc += B_W[j] * K[j][i]
            y_new[i] = y[i] + direction * h * acc
        _rhs(vkx, vky, vcre, vcim, y_new, K[6])
        for i in range(3):
            acc = 0.0
            for j in range(7):
                acc += E_W[j] * K[j][i]
            err_vec[i] = direction * h * acc
            sc[i] = atol + rtol * (fabs(y[i]) if fabs(y[i]) > fabs(y_new[i])
                                   else fabs(y_new[i]))
        err = _rms3(err_vec, sc)
        if err <= 1.0:
            t = t + direction * h
            for i in range(3):
                y[i] = y_new[i]
                K[0][i] = K[6][i]
            n_acc += 1
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * pow(err, -0.2)
                if fac > 5.0:
                    fac = 5.0
                if fac < 0.2:
                    fac = 0.2
            h *= fac
        else:
            n_rej += 1
            fac = 0.9 * pow(err, -0.2)
            if fac < 0.2:
                fac = 0.2
            h *= fac
    return out_arr, n_acc, n_rej
