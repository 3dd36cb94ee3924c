"""Touchstone (v1 style) and CSV serialization, plus atomic file writes.

Written files carry one option line ``# GHz S RI R <zref>`` and one row
per frequency: the frequency, then real/imaginary pairs.  Two-port rows
use the conventional S11 S21 S12 S22 order; larger networks are written
row by row (S11 S12 ... S1N S21 ...) on the same line.  Values use 17
significant digits and frequencies are shifted to GHz in decimal, so a
write-read-write cycle reproduces the file byte for byte.
"""
from __future__ import annotations

import csv
import io
import math
import os
import re
import tempfile
from decimal import Decimal
from pathlib import Path

import numpy as np

from qadpa.errors import ParameterError, ParseError
from qadpa.rfcore import SParamBlock

_FREQ_SCALE = {"HZ": 0, "KHZ": 3, "MHZ": 6, "GHZ": 9}


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _freq_text(f_hz: float, exp: int) -> str:
    d = Decimal(repr(float(f_hz))).scaleb(-exp).normalize()
    return format(d, "f")


def _order(n: int):
    if n == 2:
        return [(0, 0), (1, 0), (0, 1), (1, 1)]
    return [(i, j) for i in range(n) for j in range(n)]


def format_touchstone(s: SParamBlock, fmt: str = "RI", unit: str = "GHz") -> str:
    fmt = fmt.upper()
    if fmt not in ("RI", "MA"):
        raise ParameterError("format must be RI or MA")
    if not np.all(s.zref == s.zref[0]):
        raise ParameterError("Touchstone v1 needs one reference impedance for all ports")
    exp = _FREQ_SCALE[unit.upper()]
    lines = [f"# {unit} S {fmt} R {_fmt(s.zref[0])}"]
    order = _order(s.ports)
    for f, m in zip(s.freqs, s.data):
        parts = [_freq_text(f, exp)]
        for i, j in order:
            v = m[i, j]
            if fmt == "RI":
                parts += [_fmt(v.real), _fmt(v.imag)]
            else:
                parts += [_fmt(abs(v)), _fmt(math.degrees(math.atan2(v.imag, v.real)))]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def write_touchstone(s: SParamBlock, path, fmt: str = "RI") -> None:
    atomic_write_text(path, format_touchstone(s, fmt))


def _ports_from_name(name: str | None):
    if not name:
        return None
    m = re.search(r"\.s(\d+)p$", name, re.IGNORECASE)
    return int(m.group(1)) if m else None


def parse_touchstone(text: str, ports: int | None = None, source: str | None = None) -> SParamBlock:
    """Parse RI/MA/DB Touchstone text; ``ports`` inferred from row length if omitted."""
    option = None
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if option is not None:
                raise ParseError("second option line", lineno, source)
            tok = line[1:].upper().split()
            unit, kind, fmt, zref = "GHZ", "S", "MA", 50.0
            k = 0
            try:
                while k < len(tok):
                    t = tok[k]
                    if t in _FREQ_SCALE:
                        unit = t
                    elif t in ("S", "Y", "Z", "H", "G"):
                        kind = t
                    elif t in ("RI", "MA", "DB"):
                        fmt = t
                    elif t == "R":
                        zref = float(tok[k + 1])
                        k += 1
                    else:
                        raise ValueError(t)
                    k += 1
            except (ValueError, IndexError) as exc:
                raise ParseError(f"malformed option line ({exc})", lineno, source) from exc
            if kind != "S":
                raise ParseError("only S-parameter data is supported", lineno, source)
            if not zref > 0:
                raise ParseError("reference impedance must be positive", lineno, source)
            option = (unit, fmt, zref)
            continue
        if option is None:
            raise ParseError("data before option line", lineno, source)
        rows.append((lineno, line.split()))
    if option is None:
        raise ParseError("missing option line", None, source)
    unit, fmt, zref = option

    # Continuation lines (odd-length numeric rows) belong to the previous record.
    records: list[tuple[int, list[str]]] = []
    for lineno, tok in rows:
        if records and len(tok) % 2 == 0 and (ports is None or len(records[-1][1]) < 1 + 2 * ports * ports):
            records[-1][1].extend(tok)
        else:
            records.append((lineno, list(tok)))
    if not records:
        raise ParseError("no data rows", None, source)
    if ports is None:
        width = len(records[0][1]) - 1
        ports = int(round(math.sqrt(width / 2)))
        if 2 * ports * ports != width:
            raise ParseError("cannot infer port count from row length", records[0][0], source)
    need = 1 + 2 * ports * ports
    order = _order(ports)
    freqs, data = [], []
    exp = _FREQ_SCALE[unit]
    for lineno, tok in records:
        if len(tok) != need:
            raise ParseError(f"expected {need} values, found {len(tok)}", lineno, source)
        try:
            f = float(Decimal(tok[0]).scaleb(exp))
            vals = [float(t) for t in tok[1:]]
        except (ValueError, ArithmeticError) as exc:
            raise ParseError(f"bad number ({exc})", lineno, source) from exc
        if freqs and f <= freqs[-1]:
            raise ParseError("frequencies must be strictly increasing", lineno, source)
        m = np.zeros((ports, ports), dtype=complex)
        for (i, j), (x, y) in zip(order, zip(vals[0::2], vals[1::2])):
            if fmt == "RI":
                m[i, j] = complex(x, y)
            else:
                mag = x if fmt == "MA" else 10 ** (x / 20)
                m[i, j] = mag * complex(math.cos(math.radians(y)), math.sin(math.radians(y)))
        freqs.append(f)
        data.append(m)
    if freqs[0] <= 0:
        raise ParseError("frequencies must be positive", records[0][0], source)
    return SParamBlock(np.array(freqs), np.array(data), np.full(ports, zref))


def read_touchstone(path) -> SParamBlock:
    p = Path(path)
    return parse_touchstone(p.read_text(encoding="utf-8"), _ports_from_name(p.name), str(p))


def format_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    atomic_write_text(path, format_csv(header, rows))
