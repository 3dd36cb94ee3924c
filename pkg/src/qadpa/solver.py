"""Nodal AC analysis of passive netlists.

Each element is stamped into a complex node-admittance matrix with the
ground row and column removed.  Ports are terminated in their reference
resistances and driven one at a time by the Norton equivalent of a unit
incident wave, which yields one column of S per linear solve.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from qadpa.errors import ParameterError, SingularityError
from qadpa.rfcore import GUARD_BAND, SParamBlock, check_grid

log = logging.getLogger(__name__)

GROUND_NAMES = frozenset({"0", "gnd", "GND"})
GROUND = "0"
COND_FLAG = 1e12
ELEMENT_KINDS = ("R", "L", "C", "TL")


def _is_ground(node: str) -> bool:
    return node in GROUND_NAMES


@dataclass(frozen=True)
class Element:
    """Two-terminal R/L/C, or an ideal line between ``n1`` and ``n2`` over ground.

    ``value`` is ohms, henries or farads; lines carry ``z0``, ``theta0``
    (degrees at ``f0``) and ``f0`` instead.
    """

    kind: str
    name: str
    n1: str
    n2: str
    value: float | None = None
    z0: float | None = None
    theta0: float | None = None
    f0: float | None = None

    def __post_init__(self):
        if self.kind not in ELEMENT_KINDS:
            raise ParameterError(f"unknown element kind {self.kind!r}")
        if self.kind == "TL":
            for nm in ("z0", "theta0", "f0"):
                v = getattr(self, nm)
                if v is None or not math.isfinite(v) or v <= 0:
                    raise ParameterError(f"{self.name}: {nm} must be positive")
        elif self.value is None or not math.isfinite(self.value) or self.value <= 0:
            raise ParameterError(f"{self.name}: value must be positive")


@dataclass(frozen=True)
class Port:
    number: int
    node: str
    zref: float = 50.0
    ref_node: str = GROUND

    def __post_init__(self):
        if not (self.zref > 0 and math.isfinite(self.zref)):
            raise ParameterError(f"port {self.number}: reference impedance must be positive")


@dataclass
class Netlist:
    """Nodes, elements and ordered ports.  Ground ('0'/'gnd') is implicit."""

    nodes: list[str] = field(default_factory=list)
    elements: list[Element] = field(default_factory=list)
    ports: list[Port] = field(default_factory=list)

    def node_index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(n for n in self.nodes if not _is_ground(n))}

    def add(self, element: Element) -> Element:
        self.elements.append(element)
        return element

    def validate(self) -> None:
        declared = set(self.nodes) | GROUND_NAMES
        if len(set(self.nodes)) != len(self.nodes):
            raise ParameterError("duplicate node declaration")
        names = [e.name for e in self.elements]
        if len(set(names)) != len(names):
            raise ParameterError("duplicate element name")
        for e in self.elements:
            for n in (e.n1, e.n2):
                if n not in declared:
                    raise ParameterError(f"element {e.name} references undeclared node {n!r}")
            if e.n1 == e.n2:
                raise ParameterError(f"element {e.name} is shorted on node {e.n1!r}")
        if not self.ports:
            raise ParameterError("netlist has no ports")
        numbers = sorted(p.number for p in self.ports)
        if numbers != list(range(1, len(numbers) + 1)):
            raise ParameterError("ports must be numbered 1..N without gaps")
        for p in self.ports:
            for n in (p.node, p.ref_node):
                if n not in declared:
                    raise ParameterError(f"port {p.number} references undeclared node {n!r}")
            if p.node == p.ref_node:
                raise ParameterError(f"port {p.number} is shorted")
        reach = self._reachable_from_ground()
        for p in self.ports:
            if p.node not in reach:
                raise ParameterError(f"port {p.number} (node {p.node!r}) has no path to ground")
        floating = [n for n in self.nodes if not _is_ground(n) and n not in reach]
        if floating:
            raise ParameterError(f"nodes not connected to ground: {', '.join(floating)}")

    def _reachable_from_ground(self) -> set[str]:
        adj: dict[str, set[str]] = {}

        def link(a, b):
            a = GROUND if _is_ground(a) else a
            b = GROUND if _is_ground(b) else b
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)

        for e in self.elements:
            link(e.n1, e.n2)
            if e.kind == "TL":
                link(e.n1, GROUND)
                link(e.n2, GROUND)
        # A port termination is a resistor between its node and reference node.
        for p in self.ports:
            link(p.node, p.ref_node)
        seen = {GROUND}
        queue = deque([GROUND])
        while queue:
            n = queue.popleft()
            for m in adj.get(n, ()):
                if m not in seen:
                    seen.add(m)
                    queue.append(m)
        return seen

    def sorted_ports(self) -> list[Port]:
        return sorted(self.ports, key=lambda p: p.number)


def _stamp2(y, idx, a, b, val):
    ia = idx.get(a)
    ib = idx.get(b)
    if ia is not None:
        y[ia, ia] += val
    if ib is not None:
        y[ib, ib] += val
    if ia is not None and ib is not None:
        y[ia, ib] -= val
        y[ib, ia] -= val


def tline_y(z0: float, theta: float) -> tuple[complex, complex]:
    """(Y11, Y12) of an ideal line; errors within the guard band of n*180 deg."""
    if abs(math.remainder(theta, math.pi)) < GUARD_BAND:
        raise SingularityError(f"ideal line at {math.degrees(theta):.6g} deg has no Y-matrix")
    s = math.sin(theta)
    return -1j * math.cos(theta) / (z0 * s), 1j / (z0 * s)


def stamp_admittance(netlist: Netlist, f: float) -> np.ndarray:
    """Node admittance matrix (ground eliminated) at frequency ``f``.

    Rows follow the non-ground entries of ``netlist.nodes``.
    """
    idx = netlist.node_index()
    y = np.zeros((len(idx), len(idx)), dtype=complex)
    w = 2 * math.pi * f
    for e in netlist.elements:
        if e.kind == "R":
            _stamp2(y, idx, e.n1, e.n2, 1 / e.value)
        elif e.kind == "L":
            _stamp2(y, idx, e.n1, e.n2, 1 / (1j * w * e.value))
        elif e.kind == "C":
            _stamp2(y, idx, e.n1, e.n2, 1j * w * e.value)
        else:
            theta = math.radians(e.theta0) * f / e.f0
            y11, y12 = tline_y(e.z0, theta)
            i1, i2 = idx.get(e.n1), idx.get(e.n2)
            if i1 is not None:
                y[i1, i1] += y11
            if i2 is not None:
                y[i2, i2] += y11
            if i1 is not None and i2 is not None:
                y[i1, i2] += y12
                y[i2, i1] += y12
    return y


@dataclass
class SolveReport:
    """S-parameters plus per-frequency diagnostics.

    Failed points hold NaN in ``sparams.data`` and a message in ``errors``.
    """

    sparams: SParamBlock
    condition: np.ndarray
    errors: dict[int, str] = field(default_factory=dict)

    @property
    def flagged(self) -> np.ndarray:
        """Grid indices whose condition estimate exceeds 1e12."""
        return np.flatnonzero(~(self.condition <= COND_FLAG))

    @property
    def ok(self) -> bool:
        return not self.errors


def _incidence(netlist, idx, ports):
    # Column k maps port-k voltage (node minus reference node) onto node rows.
    b = np.zeros((len(idx), len(ports)))
    for k, p in enumerate(ports):
        if p.node in idx:
            b[idx[p.node], k] += 1.0
        if p.ref_node in idx:
            b[idx[p.ref_node], k] -= 1.0
    return b


def _solve_point(netlist, idx, ports, inc, f):
    y = stamp_admittance(netlist, f)
    zr = np.array([p.zref for p in ports])
    y = y + inc @ np.diag(1 / zr) @ inc.T
    rhs = inc * (2 / np.sqrt(zr))
    cond = float(np.linalg.cond(y))
    if not np.isfinite(cond):
        raise SingularityError("singular nodal matrix")
    v = np.linalg.solve(y, rhs)
    vport = inc.T @ v
    s = vport / np.sqrt(zr)[:, None] - np.eye(len(ports))
    return s, cond


def solve_sparams(netlist: Netlist, freqs, workers: int = 1) -> SolveReport:
    """N-port S-parameters of ``netlist`` on ``freqs``.

    Points are independent; with ``workers > 1`` they are evaluated on a
    thread pool and assembled in grid order.  A singular point is recorded
    in the report and does not stop the sweep.
    """
    netlist.validate()
    f = check_grid(freqs)
    ports = netlist.sorted_ports()
    idx = netlist.node_index()
    inc = _incidence(netlist, idx, ports)
    n = len(ports)

    def one(k):
        try:
            return _solve_point(netlist, idx, ports, inc, f[k])
        except (SingularityError, np.linalg.LinAlgError) as exc:
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(f.size)))
    else:
        results = [one(k) for k in range(f.size)]

    data = np.full((f.size, n, n), np.nan + 1j * np.nan)
    cond = np.full(f.size, np.inf)
    errors = {}
    for k, res in enumerate(results):
        if isinstance(res, Exception):
            errors[k] = f"{f[k]:.9g} Hz: {res}"
            log.warning("solve failed at %s", errors[k])
            continue
        data[k], cond[k] = res
    block = SParamBlock(f, data, np.array([p.zref for p in ports]))
    return SolveReport(block, cond, errors)
