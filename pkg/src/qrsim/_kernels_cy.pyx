# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled RK4 kernels (hot loops of the rate-equation and master-equation
integrators).  ``qrsim._kernels_py`` is the reference implementation; the two
must agree to rounding."""

from libc.math cimport cos, exp, sin

import numpy as np

from scipy.linalg.cython_blas cimport zgemm

BACKEND = "cython"

ctypedef double complex zdouble


cdef inline double _rate(double s, double t, double pref, double w_qr,
                         double kappa, double n_plus, double n_minus,
                         double wt_plus, double wt_minus,
                         double lor_plus, double lor_minus,
                         double d2_plus, double d2_minus, bint full) nogil:
    cdef double env = exp(-0.5 * kappa * t)
    cdef double sn = sin(w_qr * t) * env
    cdef double cs, b1, dfp, dfm, drive
    cdef double bracket = 0.5 - 0.5 * s - 0.5 * ((1.0 + s) * n_plus - (1.0 - s) * n_minus)
    if full:
        cs = cos(w_qr * t) * env
        b1 = 2.0 * w_qr * sn + kappa * (1.0 - cs)
        dfp = lor_plus * (2.0 * wt_plus * (1.0 - cs) + kappa * sn)
        dfm = lor_minus * (2.0 * wt_minus * (1.0 - cs) + kappa * sn)
        drive = 0.5 * ((1.0 + s) * dfp - (1.0 - s) * dfm)
    else:
        b1 = 2.0 * w_qr * sn + kappa
        drive = 0.5 * ((1.0 + s) * d2_plus - (1.0 - s) * d2_minus)
    return pref * (b1 * bracket - drive)


def rate_rk4(double sigma0, double t0, double dt, Py_ssize_t n_steps,
             double pref, double w_qr, double kappa,
             double n_plus, double n_minus, double wt_plus, double wt_minus,
             double lor_plus, double lor_minus, bint full):
    """See qrsim._kernels_py.rate_rk4."""
    cdef double d2_plus = 2.0 * wt_plus * lor_plus
    cdef double d2_minus = 2.0 * wt_minus * lor_minus
    out_arr = np.empty(n_steps + 1)
    cdef double[::1] out = out_arr
    cdef double s = sigma0
    cdef double overshoot = 0.0
    cdef double t, k1, k2, k3, k4
    cdef Py_ssize_t i
    out[0] = sigma0
    with nogil:
        for i in range(n_steps):
            t = t0 + i * dt
            k1 = _rate(s, t, pref, w_qr, kappa, n_plus, n_minus,
                       wt_plus, wt_minus, lor_plus, lor_minus, d2_plus, d2_minus, full)
            k2 = _rate(s + 0.5 * dt * k1, t + 0.5 * dt, pref, w_qr, kappa, n_plus, n_minus,
                       wt_plus, wt_minus, lor_plus, lor_minus, d2_plus, d2_minus, full)
            k3 = _rate(s + 0.5 * dt * k2, t + 0.5 * dt, pref, w_qr, kappa, n_plus, n_minus,
                       wt_plus, wt_minus, lor_plus, lor_minus, d2_plus, d2_minus, full)
            k4 = _rate(s + dt * k3, t + dt, pref, w_qr, kappa, n_plus, n_minus,
                       wt_plus, wt_minus, lor_plus, lor_minus, d2_plus, d2_minus, full)
            s = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if s > 1.0:
                if s - 1.0 > overshoot:
                    overshoot = s - 1.0
                s = 1.0
            elif s < -1.0:
                if -1.0 - s > overshoot:
                    overshoot = -1.0 - s
                s = -1.0
            out[i + 1] = s
    return out_arr, overshoot


cdef inline void _gemm_nn(zdouble alpha, zdouble[:, ::1] a, zdouble[:, ::1] b,
                          zdouble beta, zdouble[:, ::1] c) nogil:
    # row-major C = alpha * A @ B + beta * C for square matrices
    cdef int d = <int> a.shape[0]
    zgemm("N", "N", &d, &d, &d, &alpha, &b[0, 0], &d, &a[0, 0], &d, &beta, &c[0, 0], &d)


cdef inline void _gemm_nc(zdouble alpha, zdouble[:, ::1] a, zdouble[:, ::1] b,
                          zdouble beta, zdouble[:, ::1] c) nogil:
    # row-major C = alpha * A @ B^H + beta * C for square matrices
    cdef int d = <int> a.shape[0]
    zgemm("C", "N", &d, &d, &d, &alpha, &b[0, 0], &d, &a[0, 0], &d, &beta, &c[0, 0], &d)


cdef void _rhs(zdouble[:, ::1] out, zdouble[:, ::1] r, double t,
               zdouble[:, ::1] drift, zdouble[:, ::1] a1, zdouble[:, ::1] a2,
               bint driven, zdouble[:, ::1] dp, zdouble[:, ::1] dm,
               double omega_d, zdouble[:, ::1] tmp, zdouble[:, ::1] hd) nogil:
    cdef zdouble one = 1.0, zero = 0.0
    cdef zdouble mi = -1j, pi_ = 1j
    cdef zdouble c
    cdef Py_ssize_t i, j, d = r.shape[0]
    _gemm_nn(one, drift, r, zero, out)
    _gemm_nc(one, r, drift, one, out)
    _gemm_nn(one, a1, r, zero, tmp)
    _gemm_nc(one, tmp, a1, one, out)
    _gemm_nn(one, a2, r, zero, tmp)
    _gemm_nc(one, tmp, a2, one, out)
    if driven:
        c = cos(omega_d * t) - 1j * sin(omega_d * t)
        for i in range(d):
            for j in range(d):
                hd[i, j] = c * dp[i, j] + c.conjugate() * dm[i, j]
        _gemm_nn(mi, hd, r, one, out)
        _gemm_nn(pi_, r, hd, one, out)


def lindblad_step_interval(rho, drift, a_down, a_up, drive_plus, drive_minus,
                           double omega_d, double t0, double dt, Py_ssize_t n_steps):
    """See qrsim._kernels_py.lindblad_step_interval."""
    cdef bint driven = drive_plus is not None
    cdef zdouble[:, ::1] r = rho
    cdef zdouble[:, ::1] m = np.ascontiguousarray(drift)
    cdef zdouble[:, ::1] a1 = np.ascontiguousarray(a_down)
    cdef zdouble[:, ::1] a2 = np.ascontiguousarray(a_up)
    cdef Py_ssize_t d = r.shape[0]
    empty = np.zeros((1, 1), dtype=complex)
    cdef zdouble[:, ::1] dp = np.ascontiguousarray(drive_plus) if driven else empty
    cdef zdouble[:, ::1] dm = np.ascontiguousarray(drive_minus) if driven else empty
    buf = np.empty((7, d, d), dtype=complex)
    cdef zdouble[:, ::1] k1 = buf[0]
    cdef zdouble[:, ::1] k2 = buf[1]
    cdef zdouble[:, ::1] k3 = buf[2]
    cdef zdouble[:, ::1] k4 = buf[3]
    cdef zdouble[:, ::1] stage = buf[4]
    cdef zdouble[:, ::1] tmp = buf[5]
    cdef zdouble[:, ::1] hd = buf[6]
    cdef double t
    cdef Py_ssize_t step, i, j
    cdef double half = 0.5 * dt, sixth = dt / 6.0
    with nogil:
        for step in range(n_steps):
            t = t0 + step * dt
            _rhs(k1, r, t, m, a1, a2, driven, dp, dm, omega_d, tmp, hd)
            for i in range(d):
                for j in range(d):
                    stage[i, j] = r[i, j] + half * k1[i, j]
            _rhs(k2, stage, t + half, m, a1, a2, driven, dp, dm, omega_d, tmp, hd)
            for i in range(d):
                for j in range(d):
                    stage[i, j] = r[i, j] + half * k2[i, j]
            _rhs(k3, stage, t + half, m, a1, a2, driven, dp, dm, omega_d, tmp, hd)
            for i in range(d):
                for j in range(d):
                    stage[i, j] = r[i, j] + dt * k3[i, j]
            _rhs(k4, stage, t + dt, m, a1, a2, driven, dp, dm, omega_d, tmp, hd)
            for i in range(d):
                for j in range(d):
                    r[i, j] = r[i, j] + sixth * (
                        k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j]
                    )
