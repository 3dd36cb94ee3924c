"""Behavioral model of the quasi-asymmetric Doherty chain.

Input power is split between a main and an auxiliary path by a logistic
function of drive, each path is a smooth-knee saturating amplifier, and
the two outputs meet in an ideal matched combiner designed for the power
ratio K^2 = P_aux / P_main.  Powers are dBm at the interface and watts
inside.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from qadpa import kernels
from qadpa.errors import DegenerateSignalError, ParameterError

# Harmonic levels below this are reported as the floor (exact zeros).
DBC_FLOOR = -400.0


def dbm_to_w(p_dbm):
    return 1e-3 * np.power(10.0, np.asarray(p_dbm, dtype=float) / 10.0)


def w_to_dbm(p_w):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(p_w, dtype=float) / 1e-3)


def backoff_from_delta(delta: float) -> float:
    """Output back-off (negative dB) for an aux/main size ratio ``delta``."""
    if not delta >= 0:
        raise ParameterError("size ratio must be non-negative")
    return -10.0 * math.log1p(delta * delta) / math.log(10.0)


def delta_from_backoff(obo_db: float) -> float:
    """Size ratio giving an output back-off of ``obo_db`` (positive dB)."""
    if not obo_db >= 0:
        raise ParameterError("back-off magnitude must be non-negative")
    return math.sqrt(math.expm1(obo_db * math.log(10.0) / 10.0))


def combine(p_main, p_aux, phase_offset_deg: float, design_ratio_k2: float):
    """Output power of an ideal matched combiner designed for K^2 = P_aux/P_main.

    In-phase inputs in the design ratio combine without loss; any other
    amplitude or phase relation dissipates the difference in the bridge.
    """
    if not design_ratio_k2 > 0:
        raise ParameterError("combiner ratio must be positive")
    pm = np.asarray(p_main, dtype=float)
    pa = np.asarray(p_aux, dtype=float)
    if np.any(pm < 0) or np.any(pa < 0):
        raise ParameterError("powers must be non-negative")
    c2 = 1.0 / math.sqrt(1.0 + design_ratio_k2)
    c3 = math.sqrt(design_ratio_k2) * c2
    wave = c2 * np.sqrt(pm) + c3 * np.sqrt(pa) * np.exp(1j * math.radians(phase_offset_deg))
    out = np.abs(wave) ** 2
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PathModel:
    """Saturating amplifier: p_out = G p_in (1 + (G p_in / p_sat)^(2s))^(-1/(2s))."""

    small_signal_gain: float
    p_sat: float
    knee_sharpness: float = 2.0
    dc_power: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.small_signal_gain) and math.isfinite(self.p_sat)):
            raise ParameterError("gain and saturated power must be finite")
        if not self.knee_sharpness > 0:
            raise ParameterError("knee sharpness must be positive")
        if self.dc_power is not None and not self.dc_power > 0:
            raise ParameterError("dc power must be positive when given")

    def transfer_w(self, p_in_w):
        g = 10.0 ** (self.small_signal_gain / 10.0)
        psat = float(dbm_to_w(self.p_sat))
        lin = g * np.asarray(p_in_w, dtype=float)
        two_s = 2.0 * self.knee_sharpness
        # (1 + x^2s)^(-1/2s) evaluated in log space to stay finite far past the knee.
        with np.errstate(divide="ignore"):
            lx = np.log(lin / psat)
        return lin * np.exp(-np.logaddexp(0.0, two_s * lx) / two_s)


@dataclass(frozen=True)
class SplitFunction:
    """Fraction of input power sent to the main path, logistic in drive (dBm)."""

    main_fraction_low: float
    main_fraction_high: float
    transition_center: float
    transition_width: float

    def __post_init__(self):
        for v in (self.main_fraction_low, self.main_fraction_high):
            if not 0 <= v <= 1:
                raise ParameterError("split fractions must lie in [0, 1]")
        if not self.main_fraction_low > self.main_fraction_high:
            raise ParameterError("main path must receive more power at low drive")
        if not self.transition_width > 0:
            raise ParameterError("transition width must be positive")

    def main_fraction(self, pin_dbm):
        x = (np.asarray(pin_dbm, dtype=float) - self.transition_center) / self.transition_width
        sig = 0.5 * (1.0 + np.tanh(-0.5 * x))  # 1 / (1 + e^x) without overflow
        return self.main_fraction_high + (self.main_fraction_low - self.main_fraction_high) * sig


@dataclass(frozen=True)
class DohertyChain:
    split: SplitFunction
    main: PathModel
    aux: PathModel
    combiner_ratio: float
    phase_offset: float = 0.0

    def __post_init__(self):
        if not self.combiner_ratio > 0:
            raise ParameterError("combiner ratio must be positive")


@dataclass
class ChainCurves:
    pin_dbm: np.ndarray
    pout_dbm: np.ndarray
    gain_db: np.ndarray
    main_in_dbm: np.ndarray
    aux_in_dbm: np.ndarray
    main_out_dbm: np.ndarray
    aux_out_dbm: np.ndarray
    aux_share: np.ndarray
    chain: DohertyChain


def chain_response(chain: DohertyChain, pin_dbm) -> ChainCurves:
    """Evaluate the chain on a strictly increasing input-power grid (dBm)."""
    pin = np.asarray(pin_dbm, dtype=float)
    if pin.ndim != 1 or pin.size == 0:
        raise ParameterError("pin grid must be a non-empty 1-D sequence")
    if pin.size > 1 and np.any(np.diff(pin) <= 0):
        raise ParameterError("pin grid must be strictly increasing")
    pin_w = dbm_to_w(pin)
    frac = chain.split.main_fraction(pin)
    main_in = pin_w * frac
    aux_in = pin_w * (1.0 - frac)
    main_out = chain.main.transfer_w(main_in)
    aux_out = chain.aux.transfer_w(aux_in)
    pout = combine(main_out, aux_out, chain.phase_offset, chain.combiner_ratio)
    k2 = chain.combiner_ratio
    wm = main_out / (1.0 + k2)
    wa = aux_out * k2 / (1.0 + k2)
    with np.errstate(invalid="ignore"):
        share = np.where(wm + wa > 0, wa / (wm + wa), 0.0)
    pout_dbm = w_to_dbm(pout)
    return ChainCurves(
        pin_dbm=pin,
        pout_dbm=pout_dbm,
        gain_db=pout_dbm - pin,
        main_in_dbm=w_to_dbm(main_in),
        aux_in_dbm=w_to_dbm(aux_in),
        main_out_dbm=w_to_dbm(main_out),
        aux_out_dbm=w_to_dbm(aux_out),
        aux_share=share,
        chain=chain,
    )


@dataclass
class ChainMetrics:
    peak_pout_dbm: float
    small_signal_gain_db: float
    compression_db: float
    opbo_db: float | None
    opbo_pin_dbm: float | None
    efficiency: np.ndarray | None = None
    peak_efficiency: float | None = None


def metrics(curves: ChainCurves, aux_threshold: float = 0.10) -> ChainMetrics:
    """Peak power, compression, back-off point and (optionally) drain efficiency.

    The small-signal gain is the gain at the lowest grid point and the
    compression is its largest drop over the grid.  The back-off is
    measured from the peak output to the output at the drive where the
    auxiliary wave first carries ``aux_threshold`` of the combined power,
    interpolated linearly in drive.  Efficiency needs ``dc_power`` on both
    paths.
    """
    if not 0 < aux_threshold < 1:
        raise ParameterError("aux threshold must lie in (0, 1)")
    g0 = float(curves.gain_db[0])
    comp = float(max(0.0, np.max(g0 - curves.gain_db)))
    peak = float(np.max(curves.pout_dbm))

    opbo = opbo_pin = None
    share = curves.aux_share
    above = np.flatnonzero(share >= aux_threshold)
    if above.size:
        k = int(above[0])
        if k == 0:
            opbo_pin = float(curves.pin_dbm[0])
            p_at = float(curves.pout_dbm[0])
        else:
            t = (aux_threshold - share[k - 1]) / (share[k] - share[k - 1])
            opbo_pin = float(curves.pin_dbm[k - 1] + t * (curves.pin_dbm[k] - curves.pin_dbm[k - 1]))
            p_at = float(np.interp(opbo_pin, curves.pin_dbm, curves.pout_dbm))
        opbo = peak - p_at

    eff = peak_eff = None
    ch = curves.chain
    if ch.main.dc_power is not None and ch.aux.dc_power is not None:
        eff = dbm_to_w(curves.pout_dbm) / (ch.main.dc_power + ch.aux.dc_power)
        peak_eff = float(eff[int(np.argmax(curves.pout_dbm))])
    return ChainMetrics(peak, g0, comp, opbo, opbo_pin, eff, peak_eff)


@dataclass
class GoldenConfig:
    chain: DohertyChain
    pin_dbm: np.ndarray
    aux_threshold: float = 0.10
    source: str = ""


def load_chain_config(path=None) -> GoldenConfig:
    """Read an INI chain description; ``None`` loads the shipped golden config.

    Sections ``[split]``, ``[main]``, ``[aux]``, ``[combiner]`` and
    ``[sweep]``; see ``data/golden.cfg`` for the keys.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is None:
        text = resources.files("qadpa").joinpath("data/golden.cfg").read_text()
        src = "golden.cfg"
    else:
        text = Path(path).read_text()
        src = str(path)
    cp.read_string(text, source=src)
    try:
        split = SplitFunction(
            cp.getfloat("split", "main_fraction_low"),
            cp.getfloat("split", "main_fraction_high"),
            cp.getfloat("split", "transition_center_dbm"),
            cp.getfloat("split", "transition_width_db"),
        )

        def path_model(sec):
            dc = cp.get(sec, "dc_power_w", fallback="").strip()
            return PathModel(
                cp.getfloat(sec, "small_signal_gain_db"),
                cp.getfloat(sec, "p_sat_dbm"),
                cp.getfloat(sec, "knee_sharpness", fallback=2.0),
                float(dc) if dc else None,
            )

        chain = DohertyChain(
            split,
            path_model("main"),
            path_model("aux"),
            cp.getfloat("combiner", "design_ratio_k2"),
            cp.getfloat("combiner", "phase_offset_deg", fallback=0.0),
        )
        start = cp.getfloat("sweep", "pin_start_dbm")
        stop = cp.getfloat("sweep", "pin_stop_dbm")
        points = cp.getint("sweep", "points")
        thr = cp.getfloat("sweep", "aux_threshold", fallback=0.10)
    except (configparser.Error, ValueError) as exc:
        raise ParameterError(f"{src}: {exc}") from exc
    if points < 2 or stop <= start:
        raise ParameterError(f"{src}: sweep needs at least two increasing points")
    return GoldenConfig(chain, np.linspace(start, stop, points), thr, src)


@dataclass(frozen=True)
class StageClipper:
    """Linear voltage gain followed by symmetric hard clipping at +-clip_level."""

    gain: float
    clip_level: float

    def __post_init__(self):
        if not (self.gain > 0 and self.clip_level > 0):
            raise ParameterError("stage gain and clip level must be positive")


@dataclass
class HarmonicResult:
    fundamental_dbc: float
    h2_dbc: float
    h3_dbc: float
    fundamental_power: float
    h2_power: float
    h3_power: float
    bin_power: np.ndarray = field(repr=False)
    mean_square: float = 0.0

    @property
    def harmonic_power(self) -> float:
        """Absolute output power in the second plus third harmonic."""
        return self.h2_power + self.h3_power


def one_sided_power(x) -> np.ndarray:
    """Per-bin power of a real record; sums to the record's mean square."""
    x = np.asarray(x, dtype=float)
    n = x.size
    spec = np.fft.rfft(x) / n
    p = np.abs(spec) ** 2
    if n % 2 == 0:
        p[1:-1] *= 2
    else:
        p[1:] *= 2
    return p


def harmonic_cascade(stages, drive_amplitude: float, n_periods: int = 4,
                     samples_per_period: int = 256) -> HarmonicResult:
    """Drive a sine through the stages and measure harmonics by DFT.

    The record covers exactly ``n_periods`` periods, so the k-th harmonic
    falls in bin ``k * n_periods`` with no leakage.
    """
    stages = list(stages)
    if not stages:
        raise ParameterError("at least one stage is required")
    spp = int(samples_per_period)
    if spp < 64 or spp & (spp - 1):
        raise ParameterError("samples_per_period must be a power of two >= 64")
    if n_periods < 1:
        raise ParameterError("n_periods must be positive")
    if not drive_amplitude >= 0:
        raise ParameterError("drive amplitude must be non-negative")
    n = spp * n_periods
    t = np.arange(n) / spp
    x = drive_amplitude * np.sin(2 * np.pi * t)
    y = kernels.clip_chain(
        x,
        np.array([s.gain for s in stages], dtype=float),
        np.array([s.clip_level for s in stages], dtype=float),
    )
    p = one_sided_power(y)
    p1 = p[n_periods]
    if not p1 > 0:
        raise DegenerateSignalError("output has no fundamental component")

    def dbc(ph):
        return 10 * math.log10(ph / p1) if ph > 0 else DBC_FLOOR

    p2 = p[2 * n_periods] if 2 * n_periods < p.size else 0.0
    p3 = p[3 * n_periods] if 3 * n_periods < p.size else 0.0
    return HarmonicResult(
        fundamental_dbc=0.0,
        h2_dbc=max(dbc(p2), DBC_FLOOR),
        h3_dbc=max(dbc(p3), DBC_FLOOR),
        fundamental_power=float(p1),
        h2_power=float(p2),
        h3_power=float(p3),
        bin_power=p,
        mean_square=float(np.mean(y * y)),
    )


# Representative two-stage operating point for the biasing-order experiment.
# Clip levels are absolute output swings (volts) fixed by bias depth: deeper
# bias leaves less swing.  Both stages have the same device size, so a given
# bias gives the same swing on either stage; gains are equal across cases.
HARMONIC_CASES_DRIVE = 1.0
HARMONIC_CASES_GAINS = (1.5, 1.9)
HARMONIC_CASES_CLIP = {"deep": 1.45, "shared": 2.2, "light": 3.0}


def biasing_cases() -> dict[str, list[StageClipper]]:
    """Case 1: stage 1 deeper; Case 2: same bias on both; Case 3: stage 2 deeper."""
    g1, g2 = HARMONIC_CASES_GAINS
    c = HARMONIC_CASES_CLIP
    return {
        "case1": [StageClipper(g1, c["deep"]), StageClipper(g2, c["light"])],
        "case2": [StageClipper(g1, c["shared"]), StageClipper(g2, c["shared"])],
        "case3": [StageClipper(g1, c["light"]), StageClipper(g2, c["deep"])],
    }
