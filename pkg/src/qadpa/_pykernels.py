"""numpy implementations of the hot kernels (fallback for the Cython build)."""
import numpy as np


def match_fitness(params, zgoal, zint, ztgt, zref1, zref2,
                  phase_target_deg, phase_weight, phase_scale_deg):
    """Penalised two-section matching fitness for a batch of candidates.

    ``params`` is (N, 4): Z1 ohm, theta1 deg, Z2 ohm, theta2 deg.  Returns
    (fitness, residual, phase_deg) arrays of length N.
    """
    p = np.ascontiguousarray(params, dtype=float).reshape(-1, 4)
    z1, z2 = p[:, 0], p[:, 2]
    t1, t2 = np.radians(p[:, 1]), np.radians(p[:, 3])
    c1, s1 = np.cos(t1), np.sin(t1)
    c2, s2 = np.cos(t2), np.sin(t2)

    zin1 = z1 * (zint * c1 + 1j * z1 * s1) / (z1 * c1 + 1j * zint * s1)
    zin2 = z2 * (ztgt * c2 + 1j * z2 * s2) / (z2 * c2 + 1j * ztgt * s2)
    e1 = (zin1 - zgoal) / abs(zgoal)
    e2 = (zin2 - zint) / zint
    resid = e1.real ** 2 + e1.imag ** 2 + e2.real ** 2 + e2.imag ** 2

    a = c1 * c2 - z1 * s1 * s2 / z2
    b = 1j * (c1 * z2 * s2 + z1 * s1 * c2)
    c = 1j * (s1 * c2 / z1 + c1 * s2 / z2)
    d = c1 * c2 - z2 * s1 * s2 / z1
    den = a * zref2 + b + c * zref1 * zref2 + d * zref1
    s21 = 2.0 * np.sqrt(zref1.real * zref2) / den
    phase = np.degrees(np.arctan2(s21.imag, s21.real))
    dphi = np.mod(phase - phase_target_deg + 180.0, 360.0) - 180.0
    fitness = resid + phase_weight * (dphi / phase_scale_deg) ** 2
    return fitness, resid, phase


def clip_chain(x, gains, clips):
    """Pass samples through gain-then-symmetric-clip stages."""
    y = np.array(x, dtype=float)
    for g, c in zip(gains, clips):
        y = np.clip(g * y, -c, c)
    return y
