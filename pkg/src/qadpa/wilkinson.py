"""Equal and unequal-split Wilkinson dividers/combiners.

Port 1 is the common port, port 2 the main path and port 3 the auxiliary
path.  The power ratio is P2/P3; with K^2 = P3/P2 the classic synthesis
gives quarter-wave branches Z0*sqrt(K(1+K^2)) and Z0*sqrt((1+K^2)/K^3),
a bridge resistor Z0*(K + 1/K), and quarter-wave output transformers
back to Z0 from the branch-end impedances Z0*K and Z0/K.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qadpa.errors import ParameterError
from qadpa.matching import pi_equivalent
from qadpa.rfcore import TLineSection
from qadpa.solver import Element, Netlist, Port, solve_sparams


@dataclass(frozen=True)
class WilkinsonDesign:
    z0_system: float
    k_squared: float
    branch2_z0: float
    branch3_z0: float
    bridge_resistor: float
    output_transformer2_z0: float
    output_transformer3_z0: float
    f0: float
    with_transformers: bool = True

    @property
    def k(self) -> float:
        return math.sqrt(self.k_squared)

    @property
    def power_ratio_2_over_3(self) -> float:
        return 1.0 / self.k_squared


def design(z0_system: float, power_ratio_2_over_3: float, f0: float,
           with_transformers: bool = True) -> WilkinsonDesign:
    """Synthesize a Wilkinson for the power ratio P2/P3 (1.0 for equal split).

    The formulas hold for either port being the weaker one, so a ratio
    above 1 needs no special handling.
    """
    if not (z0_system > 0 and math.isfinite(z0_system)):
        raise ParameterError("system impedance must be positive")
    if not (power_ratio_2_over_3 > 0 and math.isfinite(power_ratio_2_over_3)):
        raise ParameterError("power ratio must be positive")
    if not f0 > 0:
        raise ParameterError("f0 must be positive")
    k2 = 1.0 / power_ratio_2_over_3
    k = math.sqrt(k2)
    z0 = float(z0_system)
    return WilkinsonDesign(
        z0_system=z0,
        k_squared=k2,
        branch2_z0=z0 * math.sqrt(k * (1 + k2)),
        branch3_z0=z0 * math.sqrt((1 + k2) / k ** 3),
        bridge_resistor=z0 * (k + 1 / k),
        output_transformer2_z0=z0 * math.sqrt(k),
        output_transformer3_z0=z0 / math.sqrt(k),
        f0=float(f0),
        with_transformers=with_transformers,
    )


def _line(net, name, a, b, z0, f0, lumped, theta0=90.0):
    if not lumped:
        net.add(Element("TL", name, a, b, z0=z0, theta0=theta0, f0=f0))
        return
    pi = pi_equivalent(TLineSection(z0, theta0, f0))
    net.add(Element("C", f"{name}_C1", a, "0", value=pi.c_shunt))
    net.add(Element("L", f"{name}_L", a, b, value=pi.l_series))
    net.add(Element("C", f"{name}_C2", b, "0", value=pi.c_shunt))


def to_netlist(d: WilkinsonDesign, *, bridge: bool = True, lumped: bool = False) -> Netlist:
    """Three-port netlist of ``d``.

    ``bridge=False`` drops the isolation resistor (diagnostic variant);
    ``lumped=True`` replaces every line by its pi-equivalent.
    """
    net = Netlist(nodes=["1", "a", "b"])
    _line(net, "TL2", "1", "a", d.branch2_z0, d.f0, lumped)
    _line(net, "TL3", "1", "b", d.branch3_z0, d.f0, lumped)
    if bridge:
        net.add(Element("R", "RB", "a", "b", value=d.bridge_resistor))
    if d.with_transformers:
        net.nodes += ["2", "3"]
        _line(net, "TQ2", "a", "2", d.output_transformer2_z0, d.f0, lumped)
        _line(net, "TQ3", "b", "3", d.output_transformer3_z0, d.f0, lumped)
        out2, out3 = "2", "3"
    else:
        out2, out3 = "a", "b"
    net.ports = [
        Port(1, "1", d.z0_system),
        Port(2, out2, d.z0_system),
        Port(3, out3, d.z0_system),
    ]
    return net


def analyze(d: WilkinsonDesign, freqs, **netlist_kwargs):
    """Solve the design's netlist on ``freqs``; returns the solver report."""
    return solve_sparams(to_netlist(d, **netlist_kwargs), np.atleast_1d(np.asarray(freqs, float)))


def terminal_phase_difference(d: WilkinsonDesign, freqs) -> np.ndarray:
    """angle(S21) - angle(S31) in degrees over ``freqs``, unwrapped."""
    rep = analyze(d, freqs)
    s = rep.sparams
    diff = np.angle(s.s(2, 1)) - np.angle(s.s(3, 1))
    diff = np.unwrap(np.atleast_1d(diff))
    # Keep the unwrapped curve on the branch nearest zero.
    diff -= 2 * np.pi * np.round(diff[0] / (2 * np.pi))
    return np.degrees(diff)
