"""Line-oriented netlist text format.

::

    # comment
    node 1
    node a
    R  RB  a 2 100ohm
    L  L1  1 a 0.4974nH
    C  C1  a 0 110fF
    TL T1  1 a 35.3553 90 8          # z0 [ohm], theta [deg], f0 [GHz]
    PORT 1 1 50

Ground is ``0`` (or ``gnd``) and needs no declaration.  Unit suffixes
(ohm, nH, pH, pF, fF, GHz) are case-insensitive; a bare value is in base
SI units, except the line ``f0`` field which is in GHz.
"""
from __future__ import annotations

import math
import re
from pathlib import Path

from qadpa.errors import ParameterError, ParseError
from qadpa.solver import GROUND_NAMES, Element, Netlist, Port

_UNITS = {
    "ohm": 1.0,
    "nh": 1e-9,
    "ph": 1e-12,
    "pf": 1e-12,
    "ff": 1e-15,
    "ghz": 1e9,
}
_ALLOWED = {
    "R": {"ohm"},
    "L": {"nh", "ph"},
    "C": {"pf", "ff"},
    "Z0": {"ohm"},
    "F0": {"ghz"},
}
_NUM = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)([A-Za-z]*)$")


def parse_value(token: str, what: str = "R") -> float:
    """Number with optional unit suffix -> base units (``F0`` tokens -> Hz)."""
    m = _NUM.match(token)
    if not m:
        raise ValueError(f"bad numeric value {token!r}")
    num = float(m.group(1))
    unit = m.group(2).lower()
    if not unit:
        return num * 1e9 if what == "F0" else num
    if unit not in _UNITS or unit not in _ALLOWED[what]:
        raise ValueError(f"unit {m.group(2)!r} not valid here")
    return num * _UNITS[unit]


def parse_netlist(text: str, source: str | None = None) -> Netlist:
    """Parse and validate; errors carry the offending 1-based line number."""
    net = Netlist()
    origin: dict[str, int] = {}
    port_line: dict[int, int] = {}
    last_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        last_line = lineno
        tok = line.split()
        head = tok[0].upper()

        def fail(msg):
            raise ParseError(msg, lineno, source)

        try:
            if head == "NODE":
                if len(tok) != 2:
                    fail("expected: node <name>")
                name = tok[1]
                if name in GROUND_NAMES:
                    fail("ground is implicit and cannot be declared")
                if name in net.nodes:
                    fail(f"node {name!r} declared twice")
                net.nodes.append(name)
                origin[f"node:{name}"] = lineno
            elif head in ("R", "L", "C"):
                if len(tok) != 5:
                    fail(f"expected: {head} <name> <node1> <node2> <value>")
                _, name, n1, n2, val = tok
                e = Element(head, name, n1, n2, value=parse_value(val, head))
                _add_element(net, e, lineno, origin, fail)
            elif head == "TL":
                if len(tok) != 7:
                    fail("expected: TL <name> <node1> <node2> <z0_ohm> <theta_deg> <f0_ghz>")
                _, name, n1, n2, z0, th, f0 = tok
                e = Element(
                    "TL", name, n1, n2,
                    z0=parse_value(z0, "Z0"), theta0=float(th), f0=parse_value(f0, "F0"),
                )
                _add_element(net, e, lineno, origin, fail)
            elif head == "PORT":
                if len(tok) != 4:
                    fail("expected: PORT <n> <node> <zref_ohm>")
                num = int(tok[1])
                if num in port_line:
                    fail(f"port {num} defined twice")
                if tok[2] not in net.nodes and tok[2] not in GROUND_NAMES:
                    fail(f"port {num} uses undeclared node {tok[2]!r}")
                net.ports.append(Port(num, tok[2], parse_value(tok[3], "R")))
                port_line[num] = lineno
            else:
                fail(f"unknown statement {tok[0]!r}")
        except ParseError:
            raise
        except (ValueError, ParameterError) as exc:
            raise ParseError(str(exc), lineno, source) from exc

    try:
        net.validate()
    except ParameterError as exc:
        msg = str(exc)
        line = last_line or None
        m = re.search(r"port (\d+)", msg)
        if m and int(m.group(1)) in port_line:
            line = port_line[int(m.group(1))]
        elif "nodes not connected" in msg:
            bad = msg.split(":", 1)[1].split(",")[0].strip()
            line = origin.get(f"node:{bad}", line)
        raise ParseError(msg, line, source) from exc
    return net


def _add_element(net, e, lineno, origin, fail):
    for n in (e.n1, e.n2):
        if n not in net.nodes and n not in GROUND_NAMES:
            fail(f"element {e.name} uses undeclared node {n!r}")
    if f"el:{e.name}" in origin:
        fail(f"element {e.name} defined twice")
    origin[f"el:{e.name}"] = lineno
    net.add(e)


def _num(x: float) -> str:
    return repr(float(x))


def serialize_netlist(net: Netlist, header: str | None = None) -> str:
    """Text form with full-precision base-unit values (lines: f0 in GHz)."""
    out = []
    if header:
        out += [f"# {ln}" if ln else "#" for ln in header.splitlines()]
    out += [f"node {n}" for n in net.nodes]
    for e in net.elements:
        if e.kind == "TL":
            out.append(
                f"TL {e.name} {e.n1} {e.n2} {_num(e.z0)} {_num(e.theta0)} {_num(e.f0 / 1e9)}"
            )
        else:
            out.append(f"{e.kind} {e.name} {e.n1} {e.n2} {_num(e.value)}")
    for p in net.sorted_ports():
        if p.ref_node not in GROUND_NAMES:
            raise ParameterError("the text format only supports ground-referenced ports")
        out.append(f"PORT {p.number} {p.node} {_num(p.zref)}")
    return "\n".join(out) + "\n"


def semantically_equal(a: Netlist, b: Netlist, rel: float = 1e-15) -> bool:
    """Same nodes, elements (in order) and ports, values equal to ``rel``."""
    if a.nodes != b.nodes or len(a.elements) != len(b.elements):
        return False
    close = lambda x, y: (x is None and y is None) or (  # noqa: E731
        x is not None and y is not None and math.isclose(x, y, rel_tol=rel, abs_tol=0.0)
    )
    for x, y in zip(a.elements, b.elements):
        if (x.kind, x.name, x.n1, x.n2) != (y.kind, y.name, y.n1, y.n2):
            return False
        if not all(close(getattr(x, k), getattr(y, k)) for k in ("value", "z0", "theta0", "f0")):
            return False
    pa, pb = a.sorted_ports(), b.sorted_ports()
    if len(pa) != len(pb):
        return False
    return all(
        (p.number, p.node, p.ref_node) == (q.number, q.node, q.ref_node)
        and math.isclose(p.zref, q.zref, rel_tol=rel)
        for p, q in zip(pa, pb)
    )


def read_netlist(path) -> Netlist:
    p = Path(path)
    return parse_netlist(p.read_text(encoding="utf-8"), source=str(p))
