# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same contracts as qadpa._pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, atan2, fmod, fabs, M_PI

cnp.import_array()

cdef double DEG = M_PI / 180.0


cdef inline double complex _zin(double z0, double zl, double c, double s) noexcept nogil:
    return z0 * (zl * c + 1j * z0 * s) / (z0 * c + 1j * zl * s)


def match_fitness(params, double complex zgoal, double zint, double ztgt,
                  double complex zref1, double zref2,
                  double phase_target_deg, double phase_weight, double phase_scale_deg):
    cdef double[:, ::1] p = np.ascontiguousarray(params, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = p.shape[0], i
    fit_a = np.empty(n)
    res_a = np.empty(n)
    ph_a = np.empty(n)
    cdef double[::1] fit = fit_a
    cdef double[::1] res = res_a
    cdef double[::1] ph = ph_a
    cdef double z1, z2, c1, s1, c2, s2, gnorm = sqrt(zgoal.real * zgoal.real + zgoal.imag * zgoal.imag)
    cdef double k = 2.0 * sqrt(zref1.real * zref2), phase, d
    cdef double complex e1, e2, a, b, c, dd, den, s21
    with nogil:
        for i in range(n):
            z1 = p[i, 0]
            z2 = p[i, 2]
            c1 = cos(p[i, 1] * DEG)
            s1 = sin(p[i, 1] * DEG)
            c2 = cos(p[i, 3] * DEG)
            s2 = sin(p[i, 3] * DEG)
            e1 = (_zin(z1, zint, c1, s1) - zgoal) / gnorm
            e2 = (_zin(z2, ztgt, c2, s2) - zint) / zint
            res[i] = e1.real * e1.real + e1.imag * e1.imag + e2.real * e2.real + e2.imag * e2.imag
            a = c1 * c2 - z1 * s1 * s2 / z2
            b = 1j * (c1 * z2 * s2 + z1 * s1 * c2)
            c = 1j * (s1 * c2 / z1 + c1 * s2 / z2)
            dd = c1 * c2 - z2 * s1 * s2 / z1
            den = a * zref2 + b + c * zref1 * zref2 + dd * zref1
            s21 = k / den
            phase = atan2(s21.imag, s21.real) / DEG
            d = fmod(phase - phase_target_deg + 180.0, 360.0)
            if d < 0:
                d += 360.0
            d -= 180.0
            ph[i] = phase
            fit[i] = res[i] + phase_weight * (d / phase_scale_deg) * (d / phase_scale_deg)
    return fit_a, res_a, ph_a


def clip_chain(x, gains, clips):
    cdef double[::1] y = np.array(x, dtype=np.float64).ravel()
    cdef double[::1] g = np.ascontiguousarray(gains, dtype=np.float64)
    cdef double[::1] cl = np.ascontiguousarray(clips, dtype=np.float64)
    cdef Py_ssize_t n = y.shape[0], m = g.shape[0], i, j
    cdef double v
    if cl.shape[0] != m:
        raise ValueError("gains and clips differ in length")
    with nogil:
        for i in range(n):
            v = y[i]
            for j in range(m):
                v = g[j] * v
                if v > cl[j]:
                    v = cl[j]
                elif v < -cl[j]:
                    v = -cl[j]
            y[i] = v
    return np.asarray(y)
