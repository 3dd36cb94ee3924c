"""Matching-network synthesis.

Covers the single quarter-wave transformer, the two-section line match
that also realises a prescribed insertion phase (found by a constrained
genetic algorithm), and the lumped pi-equivalent used to realise a line
section with MMIC inductors and capacitors.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares

from qadpa import kernels
from qadpa.errors import ParameterError
from qadpa.ga import run_ga
from qadpa.rfcore import (
    SParamBlock,
    TLineSection,
    TwoPort,
    abcd_to_s,
    cascade,
    twoport_of_element,
)

# Returned by objective_eq4 when a tangent is within 1e-9 of its pole.
OBJECTIVE_SENTINEL = 1e30


@dataclass(frozen=True)
class MatchSpec:
    """What the two-section network must do.

    The network, loaded by ``z_target``, should present ``z_source`` (or
    its conjugate in ``conjugate_mode``) at its input, pass through the
    real ``z_intermediate`` between sections, and have an S21 phase of
    ``phase_target`` degrees at ``f0``.
    """

    z_source: complex
    z_intermediate: float
    z_target: float
    f0: float
    band: tuple[float, float]
    phase_target: float
    conjugate_mode: bool = False

    def __post_init__(self):
        object.__setattr__(self, "z_source", complex(self.z_source))
        object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if not (self.z_intermediate > 0 and self.z_target > 0):
            raise ParameterError("intermediate and target impedances must be positive")
        if abs(self.z_source) == 0:
            raise ParameterError("source impedance must be non-zero")
        if self.z_source.real <= 0:
            raise ParameterError("source impedance must have a positive real part")
        lo, hi = self.band
        if not (0 < lo < self.f0 < hi):
            raise ParameterError("band must satisfy 0 < f_lo < f0 < f_hi")
        if not 0 <= self.phase_target < 360:
            raise ParameterError("phase_target must lie in [0, 360)")

    @property
    def z_goal(self) -> complex:
        """Impedance the network input must present."""
        return self.z_source.conjugate() if self.conjugate_mode else self.z_source


@dataclass(frozen=True)
class GAConfig:
    """Genetic-algorithm settings.

    Fitness is the scale-free section mismatch plus
    ``penalty_weight * (phase_error / phase_scale_deg)**2``.  A candidate is
    feasible when |gamma| <= ``gamma_max`` and the phase error is within
    ``phase_tolerance_deg``.
    """

    population: int = 200
    generations: int = 300
    crossover_rate: float = 0.9
    mutation_sigma: float = 0.05
    mutation_rate: float = 0.25
    tournament: int = 3
    elitism: int = 2
    penalty_weight: float = 10.0
    phase_scale_deg: float = 30.0
    seed: int = 0
    z0_bounds: tuple[float, float] = (15.0, 110.0)
    theta_bounds: tuple[float, float] = (5.0, 175.0)
    polish: bool = True
    workers: int = 1
    gamma_max: float = 0.1
    phase_tolerance_deg: float = 5.0
    band_points: int = 41

    def __post_init__(self):
        if self.population < 2:
            raise ParameterError("population must be at least 2")
        if self.generations < 0:
            raise ParameterError("generations must be non-negative")
        if not 0 <= self.crossover_rate <= 1:
            raise ParameterError("crossover_rate must lie in [0, 1]")
        if self.mutation_sigma <= 0:
            raise ParameterError("mutation_sigma must be positive")
        if self.penalty_weight < 0:
            raise ParameterError("penalty_weight must be non-negative")
        zl, zh = self.z0_bounds
        tl, th = self.theta_bounds
        if not (0 < zl < zh):
            raise ParameterError("z0 bounds must be positive and non-degenerate")
        if not (0 < tl < th < 180):
            raise ParameterError("theta bounds must lie inside (0, 180) and be non-degenerate")

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.z0_bounds[0], self.theta_bounds[0]] * 2)

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.z0_bounds[1], self.theta_bounds[1]] * 2)


@dataclass
class MatchResult:
    sections: tuple[TLineSection, TLineSection]
    residual_r1: complex
    residual_r2: complex
    achieved_phase: float
    phase_error: float
    gamma_at_f0: complex
    band_freqs: np.ndarray
    band_return_loss: np.ndarray
    fitness: float
    objective: float
    feasible: bool
    history: list[float] = field(default_factory=list)
    polished: bool = False

    @property
    def params(self) -> tuple[float, float, float, float]:
        s1, s2 = self.sections
        return (s1.z0, s1.theta0, s2.z0, s2.theta0)

    def to_record(self) -> dict:
        """JSON-ready dict (complex values as [re, im])."""
        s1, s2 = self.sections
        cx = lambda z: [z.real, z.imag]  # noqa: E731
        return {
            "sections": [asdict(s1), asdict(s2)],
            "residual_r1": cx(self.residual_r1),
            "residual_r2": cx(self.residual_r2),
            "achieved_phase_deg": self.achieved_phase,
            "phase_error_deg": self.phase_error,
            "gamma_at_f0": cx(self.gamma_at_f0),
            "gamma_mag_at_f0": abs(self.gamma_at_f0),
            "band_freqs_hz": self.band_freqs.tolist(),
            "band_return_loss_db": self.band_return_loss.tolist(),
            "fitness": self.fitness,
            "objective": self.objective,
            "feasible": self.feasible,
            "polished": self.polished,
            "generations_run": max(len(self.history) - 1, 0),
        }


def quarter_wave(z_load: float, z_target: float, f0: float) -> TLineSection:
    """Quarter-wave line matching two real impedances at ``f0``."""
    if not (z_load > 0 and z_target > 0):
        raise ParameterError("quarter-wave matching needs positive real impedances")
    return TLineSection(math.sqrt(z_load * z_target), 90.0, f0)


def section_residuals(params, spec: MatchSpec) -> tuple[complex, complex]:
    """Cross-multiplied section equations (ohm^2), zero when each section matches.

    r1 = Z1(z_int + jZ1 tan t1) - z_src(Z1 + j z_int tan t1)
    r2 = Z2(z_tgt + jZ2 tan t2) - z_int(Z2 + j z_tgt tan t2)
    """
    z1, th1, z2, th2 = (float(v) for v in params)
    c1, c2 = math.cos(math.radians(th1)), math.cos(math.radians(th2))
    if abs(c1) < 1e-9 or abs(c2) < 1e-9:
        return complex(math.inf), complex(math.inf)
    t1, t2 = math.tan(math.radians(th1)), math.tan(math.radians(th2))
    zs, zi, zt = spec.z_goal, spec.z_intermediate, spec.z_target
    r1 = z1 * (zi + 1j * z1 * t1) - zs * (z1 + 1j * zi * t1)
    r2 = z2 * (zt + 1j * z2 * t2) - zi * (z2 + 1j * zt * t2)
    return r1, r2


def objective_eq4(params, spec: MatchSpec) -> float:
    """|r1|^2 + |r2|^2 of :func:`section_residuals`.

    Returns ``OBJECTIVE_SENTINEL`` near a tangent pole instead of raising,
    so a search can step across it.
    """
    r1, r2 = section_residuals(params, spec)
    if not (math.isfinite(abs(r1)) and math.isfinite(abs(r2))):
        return OBJECTIVE_SENTINEL
    return abs(r1) ** 2 + abs(r2) ** 2


def two_section_twoport(sections, f: float) -> TwoPort:
    return cascade([twoport_of_element("tline", {"section": s}, f) for s in sections])


def match_fitness(params, spec: MatchSpec, cfg: GAConfig):
    """Batch fitness through the selected kernel backend: (fitness, residual, phase)."""
    zg = spec.z_goal
    return kernels.match_fitness(
        np.asarray(params, dtype=float).reshape(-1, 4),
        zg,
        float(spec.z_intermediate),
        float(spec.z_target),
        zg.conjugate(),
        float(spec.z_target),
        float(spec.phase_target),
        float(cfg.penalty_weight),
        float(cfg.phase_scale_deg),
    )


def _wrap180(deg):
    return (deg + 180.0) % 360.0 - 180.0


def _residual_vector(x, spec: MatchSpec, cfg: GAConfig) -> np.ndarray:
    z1, th1, z2, th2 = x
    zg, zi, zt = spec.z_goal, spec.z_intermediate, spec.z_target
    s1 = TLineSection(z1, th1, spec.f0)
    s2 = TLineSection(z2, th2, spec.f0)
    zin1 = two_section_twoport([s1], spec.f0).input_impedance(zi)
    zin2 = two_section_twoport([s2], spec.f0).input_impedance(zt)
    e1 = (zin1 - zg) / abs(zg)
    e2 = (zin2 - zi) / zi
    phase = _insertion_phase((s1, s2), spec)
    dphi = _wrap180(phase - spec.phase_target)
    w = math.sqrt(cfg.penalty_weight) / cfg.phase_scale_deg
    return np.array([e1.real, e1.imag, e2.real, e2.imag, w * dphi])


def _insertion_phase(sections, spec: MatchSpec) -> float:
    zg = spec.z_goal
    s = abcd_to_s(two_section_twoport(sections, spec.f0), zg.conjugate(), spec.z_target)
    return math.degrees(math.atan2(s[1, 0].imag, s[1, 0].real))


def input_gamma(sections, spec: MatchSpec, f: float) -> complex:
    """Mismatch at the network input: zero when Zin equals the goal impedance."""
    zin = two_section_twoport(sections, f).input_impedance(spec.z_target)
    zg = spec.z_goal
    return (zin - zg) / (zin + zg.conjugate())


def _polish(x0, spec, cfg):
    lo, hi = cfg.lower, cfg.upper
    x0 = np.clip(x0, lo, hi)
    sol = least_squares(
        _residual_vector,
        x0,
        bounds=(lo, hi),
        args=(spec, cfg),
        method="trf",
        x_scale=hi - lo,
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=2000,
    )
    return sol.x


def evaluate_candidate(x, spec: MatchSpec, cfg: GAConfig) -> MatchResult:
    """Build the full result record for a parameter vector (Z1, t1, Z2, t2)."""
    z1, th1, z2, th2 = (float(v) for v in x)
    sections = (TLineSection(z1, th1, spec.f0), TLineSection(z2, th2, spec.f0))
    fit = float(match_fitness([x], spec, cfg)[0][0])
    r1, r2 = section_residuals(x, spec)
    phase = _insertion_phase(sections, spec)
    dphi = _wrap180(phase - spec.phase_target)
    gamma = input_gamma(sections, spec, spec.f0)
    band = np.linspace(spec.band[0], spec.band[1], cfg.band_points)
    gam_band = np.array([abs(input_gamma(sections, spec, f)) for f in band])
    with np.errstate(divide="ignore"):
        rl = -20 * np.log10(gam_band)
    feasible = abs(gamma) <= cfg.gamma_max and abs(dphi) <= cfg.phase_tolerance_deg
    return MatchResult(
        sections=sections,
        residual_r1=r1,
        residual_r2=r2,
        achieved_phase=phase,
        phase_error=dphi,
        gamma_at_f0=gamma,
        band_freqs=band,
        band_return_loss=rl,
        fitness=fit,
        objective=objective_eq4(x, spec),
        feasible=bool(feasible),
    )


def synthesize_two_section(spec: MatchSpec, cfg: GAConfig | None = None) -> MatchResult:
    """Two-section line match with phase constraint.

    A seeded GA searches (Z1, theta1, Z2, theta2) inside the configured
    bounds; the best individual is then refined with a bounded
    least-squares step on the same fitness and kept only if it improves.
    Identical (spec, cfg) give bit-identical results.
    """
    cfg = cfg or GAConfig()

    def fitness(pop):
        return match_fitness(pop, spec, cfg)[0]

    out = run_ga(
        fitness,
        cfg.lower,
        cfg.upper,
        population=cfg.population,
        generations=cfg.generations,
        tournament=cfg.tournament,
        elitism=min(cfg.elitism, cfg.population - 1),
        crossover_rate=cfg.crossover_rate,
        mutation_rate=cfg.mutation_rate,
        mutation_sigma=cfg.mutation_sigma,
        seed=cfg.seed,
        workers=cfg.workers,
    )
    best = out.best_x
    polished = False
    if cfg.polish:
        cand = _polish(best, spec, cfg)
        if fitness(cand[None, :])[0] < out.best_fitness:
            best, polished = cand, True
    res = evaluate_candidate(best, spec, cfg)
    res.history = out.history
    res.polished = polished
    return res


def two_section_sparams(sections, freqs, zref1: float, zref2: float) -> SParamBlock:
    """S-parameters of cascaded line sections on a sweep (real references)."""
    return SParamBlock.from_twoports(
        (two_section_twoport(sections, f) for f in np.asarray(freqs, dtype=float)), zref1, zref2
    )


@dataclass(frozen=True)
class PiEquivalent:
    """Shunt C, series L, shunt C network equal to a line section at ``f0``."""

    l_series: float
    c_shunt: float
    f0: float

    def twoport(self, f: float) -> TwoPort:
        shunt = twoport_of_element("shunt-admittance", {"c": self.c_shunt}, f)
        series = twoport_of_element("series-impedance", {"l": self.l_series}, f)
        return cascade([shunt, series, shunt])


def pi_equivalent(sec: TLineSection) -> PiEquivalent:
    """Lumped pi model: L = Z0 sin(t)/w0, C = tan(t/2)/(w0 Z0)."""
    th = math.radians(sec.theta0)
    if not 0 < th < math.pi:
        raise ParameterError("pi-equivalent needs 0 < theta0 < 180 degrees")
    w0 = 2 * math.pi * sec.f0
    return PiEquivalent(sec.z0 * math.sin(th) / w0, math.tan(th / 2) / (w0 * sec.z0), sec.f0)


def theta_from_shunt_c(c: float, z0: float, f0: float) -> float:
    """Line length (degrees) whose pi-equivalent uses shunt capacitors of ``c`` farads."""
    if not (c > 0 and z0 > 0 and f0 > 0):
        raise ParameterError("c, z0 and f0 must be positive")
    return math.degrees(2 * math.atan(2 * math.pi * f0 * z0 * c))
