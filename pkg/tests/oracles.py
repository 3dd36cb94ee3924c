"""Reference computations written independently of the package.

Nothing here imports qadpa; the tests compare package output against
these closed forms and brute-force searches.
"""
import math

import numpy as np

# The output-matching problem: 10.6+j5.7 ohm device, 25 ohm intermediate,
# 50 ohm load, 8 GHz, 120 degree insertion phase.
ZS = 10.6 + 5.7j
ZI = 25.0
ZT = 50.0
F0 = 8e9
PHASE = 120.0


def line_abcd(z0, theta_rad):
    """Vectorised lossless-line chain matrix."""
    c, s = np.cos(theta_rad), np.sin(theta_rad)
    return c + 0j, 1j * z0 * s, 1j * s / z0, c + 0j


def s_from_abcd_real(a, b, c, d, r1, r2):
    """Travelling-wave S of a two-port between real references (textbook table)."""
    den = a * r2 + b + c * r1 * r2 + d * r1
    k = 2 * math.sqrt(r1 * r2)
    return np.array([
        [(a * r2 + b - c * r1 * r2 - d * r1) / den, k * (a * d - b * c) / den],
        [k / den, (-a * r2 + b - c * r1 * r2 + d * r1) / den],
    ])


def match_fitness_grid(n=64, z_bounds=(15.0, 110.0), t_bounds=(5.0, 175.0),
                       weight=10.0, scale=30.0, chunk=512):
    """Brute-force minimum of the penalised matching fitness on an n^4 grid.

    The cascade's S21 denominator separates into section-1 and section-2
    factors, so the 4-D grid is swept as outer products of 2-D grids.
    Returns (best_fitness, (z1, t1_deg, z2, t2_deg)).
    """
    z = np.linspace(*z_bounds, n)
    t = np.linspace(*t_bounds, n)
    zz, tt = np.meshgrid(z, t, indexing="ij")
    zz, tt = zz.ravel(), tt.ravel()
    a, b, c, d = line_abcd(zz, np.radians(tt))
    zin1 = (a * ZI + b) / (c * ZI + d)
    zin2 = (a * ZT + b) / (c * ZT + d)
    e1 = np.abs(zin1 - ZS) ** 2 / abs(ZS) ** 2
    e2 = np.abs(zin2 - ZI) ** 2 / ZI ** 2
    # Port 1 uses the power-wave reference conj(ZS), port 2 the real load.
    r1, r2 = np.conj(ZS), ZT
    u, v = a + r1 * c, b + r1 * d
    p, q = r2 * a + b, r2 * c + d
    best, arg = np.inf, None
    for k in range(0, zz.size, chunk):
        den = u[k:k + chunk, None] * p[None, :] + v[k:k + chunk, None] * q[None, :]
        phase = -np.degrees(np.angle(den))
        dphi = (phase - PHASE + 180.0) % 360.0 - 180.0
        f = e1[k:k + chunk, None] + e2[None, :] + weight * (dphi / scale) ** 2
        i = int(np.argmin(f))
        if f.flat[i] < best:
            best = float(f.flat[i])
            i1, i2 = k + i // zz.size, i % zz.size
            arg = (zz[i1], tt[i1], zz[i2], tt[i2])
    return best, arg


def section_residual(z0, t_deg, z_from, z_load):
    """|Z0(z_load + jZ0 tan t) - z_from(Z0 + j z_load tan t)|^2, vectorised."""
    tn = np.tan(np.radians(t_deg))
    r = z0 * (z_load + 1j * z0 * tn) - z_from * (z0 + 1j * z_load * tn)
    return np.abs(r) ** 2


def zoom_grid_min(fun, lo, hi, n=64, rounds=12, shrink=4.0):
    """Minimise a 2-D function by repeatedly refining a dense grid around the best node.

    Refined windows stay inside the starting box.
    """
    lo, hi = np.array(lo, float), np.array(hi, float)
    box_lo, box_hi = lo.copy(), hi.copy()
    best = None
    for _ in range(rounds):
        x = np.linspace(lo[0], hi[0], n)
        y = np.linspace(lo[1], hi[1], n)
        xx, yy = np.meshgrid(x, y, indexing="ij")
        f = fun(xx, yy)
        i = np.unravel_index(np.nanargmin(f), f.shape)
        best = (float(f[i]), float(xx[i]), float(yy[i]))
        half = (hi - lo) / shrink / 2
        centre = np.array(best[1:])
        lo = np.maximum(centre - half, box_lo)
        hi = np.minimum(centre + half, box_hi)
    return best


def clipped_sine_coeff(n, amplitude, clip):
    """Sine-series coefficient b_n of A*sin(wt) hard-clipped at +-clip (n odd)."""
    if clip >= amplitude:
        return amplitude if n == 1 else 0.0
    alpha = math.asin(clip / amplitude)
    if n == 1:
        part = 0.5 * (alpha - 0.5 * math.sin(2 * alpha))
    else:
        part = 0.5 * (math.sin((n - 1) * alpha) / (n - 1) - math.sin((n + 1) * alpha) / (n + 1))
    return 4 / math.pi * (amplitude * part + clip * math.cos(n * alpha) / n)


def random_chain(rng):
    """1-6 random elements as (kind, value-dict) for a two-port ladder."""
    out = []
    for _ in range(int(rng.integers(1, 7))):
        kind = rng.choice(["series", "shunt", "tline"])
        if kind == "tline":
            out.append(("tline", {"z0": rng.uniform(15, 110), "theta0": rng.uniform(10, 170),
                                  "f0": 8e9}))
            continue
        lumped = rng.choice(["r", "l", "c"])
        val = {"r": rng.uniform(1, 200), "l": rng.uniform(0.05e-9, 5e-9),
               "c": rng.uniform(0.01e-12, 5e-12)}[lumped]
        out.append((kind, {lumped: val}))
    return out


def chain_abcd(chain, f):
    """Chain-matrix product of a random_chain at frequency f."""
    w = 2 * math.pi * f
    m = np.eye(2, dtype=complex)
    for kind, p in chain:
        if kind == "tline":
            th = math.radians(p["theta0"]) * f / p["f0"]
            a, b, c, d = line_abcd(p["z0"], th)
            e = np.array([[a, b], [c, d]])
        else:
            (k, v), = p.items()
            z = {"r": v, "l": 1j * w * v, "c": 1 / (1j * w * v)}[k]
            e = np.array([[1, z], [0, 1]]) if kind == "series" else np.array([[1, 0], [1 / z, 1]])
        m = m @ e
    return m
