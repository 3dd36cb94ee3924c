"""Impedance arithmetic, ideal transmission lines and two-port algebra.

Angles are degrees at the public boundary and radians internally.  Lines
are lossless and dispersion-free, so the electrical length of a section
scales linearly with frequency: theta(f) = theta0 * f / f0.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from qadpa.errors import FrequencyMismatchError, ParameterError, SingularityError

# Half-width of the forbidden band around tan/cot poles, radians.
GUARD_BAND = 1e-9


class Termination(enum.Enum):
    """Ideal terminations that cannot be written as a finite impedance."""

    OPEN = "open"
    SHORT = "short"


OPEN = Termination.OPEN
SHORT = Termination.SHORT

Load = Union[complex, float, Termination]


def _check_positive(name, value):
    if not (isinstance(value, (int, float, np.floating)) and math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be a positive finite number, got {value!r}")


def check_grid(freqs) -> np.ndarray:
    """Validate a sweep grid (positive, strictly increasing) and return it as an array."""
    f = np.asarray(freqs, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise ParameterError("frequency grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(f)) or np.any(f <= 0):
        raise ParameterError("frequencies must be positive and finite")
    if f.size > 1 and np.any(np.diff(f) <= 0):
        raise ParameterError("frequency grid must be strictly increasing")
    return f


def _wrap_angle(rad):
    return math.remainder(rad, math.pi)


def reflection_coefficient(z: Load, zref: float) -> complex:
    """Voltage reflection coefficient of ``z`` against a real reference."""
    _check_positive("zref", zref)
    if z is OPEN:
        return 1 + 0j
    if z is SHORT:
        return -1 + 0j
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParameterError("impedance components must be finite; use OPEN/SHORT flags")
    den = z + zref
    if den == 0:
        raise SingularityError(f"z = -zref ({z}) has no reflection coefficient")
    return (z - zref) / den


def impedance_from_gamma(gamma: complex, zref: float) -> complex:
    """Inverse of :func:`reflection_coefficient`."""
    if gamma == 1:
        raise SingularityError("gamma = 1 is an open circuit")
    return zref * (1 + gamma) / (1 - gamma)


@dataclass(frozen=True)
class TLineSection:
    """Ideal line of characteristic impedance ``z0`` and length ``theta0`` degrees at ``f0``."""

    z0: float
    theta0: float
    f0: float

    def __post_init__(self):
        _check_positive("z0", self.z0)
        _check_positive("f0", self.f0)
        if not (0 < self.theta0 < 180):
            raise ParameterError(f"theta0 must lie in (0, 180) degrees, got {self.theta0}")

    def theta(self, f: float) -> float:
        """Electrical length in radians at frequency ``f``."""
        return math.radians(self.theta0) * f / self.f0


def _line_zin(z0: float, theta: float, zload: Load) -> complex:
    s, c = math.sin(theta), math.cos(theta)
    if zload is OPEN:
        if abs(_wrap_angle(theta)) < GUARD_BAND:
            raise SingularityError("open-circuited line at a multiple of 180 degrees")
        return -1j * z0 * c / s
    if zload is SHORT:
        if abs(_wrap_angle(theta - math.pi / 2)) < GUARD_BAND:
            raise SingularityError("short-circuited line at an odd multiple of 90 degrees")
        return 1j * z0 * s / c
    zl = complex(zload)
    den = z0 * c + 1j * zl * s
    if abs(den) <= 1e-12 * (z0 + abs(zl)):
        raise SingularityError(f"line input impedance is unbounded for load {zl}")
    return z0 * (zl * c + 1j * z0 * s) / den


def tline_input_impedance(sec: TLineSection, zload: Load, f: float) -> complex:
    """Input impedance of ``sec`` terminated in ``zload`` at frequency ``f``.

    ``f`` may be zero (zero-length line).  The tan form is evaluated as a
    sin/cos ratio; ideal open/short loads error inside the guard band
    around their poles.
    """
    if not (math.isfinite(f) and f >= 0):
        raise ParameterError(f"frequency must be non-negative, got {f}")
    return _line_zin(sec.z0, sec.theta(f), zload)


@dataclass(frozen=True)
class TwoPort:
    """Chain (ABCD) matrix of a two-port at one frequency."""

    a: complex
    b: complex
    c: complex
    d: complex
    f: float

    @classmethod
    def identity(cls, f: float) -> "TwoPort":
        return cls(1 + 0j, 0j, 0j, 1 + 0j, f)

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def __matmul__(self, other: "TwoPort") -> "TwoPort":
        if self.f != other.f:
            raise FrequencyMismatchError(f"cannot cascade {self.f} Hz with {other.f} Hz")
        return TwoPort(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.f,
        )

    def input_impedance(self, zload: Load) -> complex:
        if zload is OPEN:
            if self.c == 0:
                raise SingularityError("open-terminated two-port with C = 0")
            return self.a / self.c
        zl = 0j if zload is SHORT else complex(zload)
        den = self.c * zl + self.d
        if den == 0:
            raise SingularityError("unbounded input impedance")
        return (self.a * zl + self.b) / den


def _lumped_impedance(params, f, what):
    w = 2 * math.pi * f
    if "z" in params:
        return complex(params["z"])
    if "r" in params:
        r = params["r"]
        if not r > 0:
            raise ParameterError(f"{what}: resistance must be positive")
        return complex(r)
    if "l" in params:
        _check_positive(f"{what}: inductance", params["l"])
        return 1j * w * params["l"]
    if "c" in params:
        _check_positive(f"{what}: capacitance", params["c"])
        return 1 / (1j * w * params["c"])
    raise ParameterError(f"{what}: expected one of z/r/l/c")


def twoport_of_element(kind: str, params: dict, f: float) -> TwoPort:
    """Chain matrix of a primitive element.

    kind
        ``"series-impedance"`` (params ``z`` or ``r``/``l``/``c``),
        ``"shunt-admittance"`` (params ``y`` or ``r``/``l``/``c`` to ground)
        or ``"tline"`` (params ``section`` or ``z0``/``theta0``/``f0``).
    """
    _check_positive("f", f)
    if kind == "series-impedance":
        z = _lumped_impedance(params, f, kind)
        return TwoPort(1 + 0j, z, 0j, 1 + 0j, f)
    if kind == "shunt-admittance":
        if "y" in params:
            y = complex(params["y"])
        else:
            y = 1 / _lumped_impedance(params, f, kind)
        return TwoPort(1 + 0j, 0j, y, 1 + 0j, f)
    if kind == "tline":
        sec = params.get("section")
        if sec is None:
            sec = TLineSection(params["z0"], params["theta0"], params["f0"])
        th = sec.theta(f)
        s, c = math.sin(th), math.cos(th)
        return TwoPort(complex(c), 1j * sec.z0 * s, 1j * s / sec.z0, complex(c), f)
    raise ParameterError(f"unknown element kind {kind!r}")


def cascade(sections: Sequence[TwoPort]) -> TwoPort:
    """Ordered chain product; the first section sits at port 1."""
    sections = list(sections)
    if not sections:
        raise ParameterError("cascade needs at least one two-port")
    out = sections[0]
    for tp in sections[1:]:
        out = out @ tp
    return out


def _check_ref(z):
    z = complex(z)
    if not (z.real > 0 and math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ParameterError(f"reference impedance must have positive real part, got {z}")
    return z


def abcd_to_s(tp: TwoPort, zref1=50.0, zref2=50.0) -> np.ndarray:
    """Scattering matrix of a two-port for the given port references.

    Real references give the usual travelling-wave S-parameters; complex
    references use power waves, with S11 = 0 when the input impedance
    equals conj(zref1).
    """
    z1, z2 = _check_ref(zref1), _check_ref(zref2)
    a, b, c, d = tp.a, tp.b, tp.c, tp.d
    den = a * z2 + b + c * z1 * z2 + d * z1
    if den == 0:
        raise SingularityError("non-physical two-port: zero S-parameter denominator")
    k = 2 * math.sqrt(z1.real * z2.real)
    z1c, z2c = z1.conjugate(), z2.conjugate()
    s11 = (a * z2 + b - c * z1c * z2 - d * z1c) / den
    s12 = k * (a * d - b * c) / den
    s21 = k / den
    s22 = (-a * z2c + b - c * z1 * z2c + d * z1) / den
    return np.array([[s11, s12], [s21, s22]], dtype=complex)


def s_to_abcd(s, zref1=50.0, zref2=50.0, f: float = 0.0) -> TwoPort:
    """Inverse of :func:`abcd_to_s` (same wave convention)."""
    z1, z2 = _check_ref(zref1), _check_ref(zref2)
    s = np.asarray(s, dtype=complex)
    s11, s12, s21, s22 = s[0, 0], s[0, 1], s[1, 0], s[1, 1]
    if s21 == 0:
        raise SingularityError("S21 = 0 has no chain representation")
    k = 2 * s21 * math.sqrt(z1.real * z2.real)
    z1c, z2c = z1.conjugate(), z2.conjugate()
    a = ((z1c + s11 * z1) * (1 - s22) + s12 * s21 * z1) / k
    b = ((z1c + s11 * z1) * (z2c + s22 * z2) - s12 * s21 * z1 * z2) / k
    c = ((1 - s11) * (1 - s22) - s12 * s21) / k
    d = ((1 - s11) * (z2c + s22 * z2) + s12 * s21 * z2) / k
    return TwoPort(complex(a), complex(b), complex(c), complex(d), f)


@dataclass
class SParamBlock:
    """N-port scattering data on a frequency grid.

    ``data[k]`` is the N x N matrix at ``freqs[k]``; ``zref`` holds one real
    reference impedance per port.
    """

    freqs: np.ndarray
    data: np.ndarray
    zref: np.ndarray = field(default=None)

    def __post_init__(self):
        self.freqs = check_grid(self.freqs)
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 3 or self.data.shape[1] != self.data.shape[2]:
            raise ParameterError("data must have shape (nfreq, nports, nports)")
        if self.data.shape[0] != self.freqs.size:
            raise ParameterError("data and frequency grid lengths differ")
        n = self.data.shape[1]
        if self.zref is None:
            self.zref = np.full(n, 50.0)
        self.zref = np.broadcast_to(np.asarray(self.zref, dtype=float), (n,)).copy()
        if np.any(self.zref <= 0):
            raise ParameterError("port reference impedances must be positive")

    @property
    def ports(self) -> int:
        return self.data.shape[1]

    def s(self, i: int, j: int) -> np.ndarray:
        """S_ij over the grid, 1-based port numbers as in S21."""
        return self.data[:, i - 1, j - 1]

    def max_singular_value(self) -> float:
        ok = np.all(np.isfinite(self.data), axis=(1, 2))
        if not ok.any():
            return float("nan")
        return float(np.linalg.svd(self.data[ok], compute_uv=False).max())

    @classmethod
    def from_twoports(cls, tps: Iterable[TwoPort], zref1=50.0, zref2=50.0) -> "SParamBlock":
        tps = list(tps)
        data = np.array([abcd_to_s(tp, zref1, zref2) for tp in tps])
        return cls(np.array([tp.f for tp in tps]), data, np.array([zref1, zref2], dtype=float))


def fractional_bandwidth(f_lo: float, f_hi: float) -> float:
    """Percent bandwidth of [f_lo, f_hi] about its arithmetic centre."""
    if f_hi < f_lo:
        raise ParameterError("f_hi must not be below f_lo")
    centre = 0.5 * (f_lo + f_hi)
    return 100.0 * (f_hi - f_lo) / centre


@dataclass
class SweepMetrics:
    fractional_bandwidth_pct: float
    f_lo: float | None
    f_hi: float | None
    insertion_phase_deg: np.ndarray
    return_loss_db: np.ndarray


def _db20(x):
    with np.errstate(divide="ignore"):
        return 20 * np.log10(np.abs(x))


def sweep_metrics(s: SParamBlock, threshold_db: float = -20.0) -> SweepMetrics:
    """Bandwidth, insertion phase and return loss of a two-port sweep.

    The band is the widest contiguous run of grid points with
    |S11| <= ``threshold_db`` (a negative dB level); its edges are refined
    by linear interpolation of |S11| in dB to the neighbouring points.
    Phase is unwrapped point to point, so the grid must resolve less than
    180 degrees of phase per step.
    """
    if s.ports < 2:
        raise ParameterError("sweep_metrics needs at least two ports")
    if threshold_db >= 0:
        raise ParameterError("threshold_db is an |S11| level and must be negative")
    f = s.freqs
    s11_db = _db20(s.s(1, 1))
    rl = -s11_db
    phase = np.degrees(np.unwrap(np.angle(s.s(2, 1))))

    inside = s11_db <= threshold_db
    best = None
    k = 0
    n = f.size
    while k < n:
        if inside[k]:
            j = k
            while j + 1 < n and inside[j + 1]:
                j += 1
            if best is None or (f[j] - f[k]) > (f[best[1]] - f[best[0]]):
                best = (k, j)
            k = j + 1
        else:
            k += 1
    if best is None:
        return SweepMetrics(0.0, None, None, phase, rl)

    i, j = best

    def edge(inner, outer):
        y0, y1 = s11_db[inner], s11_db[outer]
        if not np.isfinite(y0) or y1 == y0:
            return f[inner]
        t = (threshold_db - y0) / (y1 - y0)
        return f[inner] + t * (f[outer] - f[inner])

    f_lo = edge(i, i - 1) if i > 0 else f[i]
    f_hi = edge(j, j + 1) if j < n - 1 else f[j]
    return SweepMetrics(fractional_bandwidth(f_lo, f_hi), float(f_lo), float(f_hi), phase, rl)


def polar(mag: float, deg: float) -> complex:
    return cmath.rect(mag, math.radians(deg))
