import json
import subprocess
import sys
from collections import deque
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qadpa import wilkinson
from qadpa.cli import main
from qadpa.errors import ParameterError, ParseError
from qadpa.netlist_io import (
    parse_netlist,
    parse_value,
    read_netlist,
    semantically_equal,
    serialize_netlist,
)
from qadpa.rfcore import SParamBlock
from qadpa.touchstone import (
    format_csv,
    format_touchstone,
    parse_touchstone,
    read_touchstone,
    write_touchstone,
)

F0 = 8e9
SHIPPED = ["input_divider.net", "omn_two_section.net", "output_combiner.net"]


def shipped_text(name):
    return resources.files("qadpa").joinpath(f"data/netlists/{name}").read_text()


# ---------------------------------------------------------------- Touchstone

def test_identity_rows():
    data = np.tile(np.array([[0, 1], [1, 0]], complex), (3, 1, 1))
    text = format_touchstone(SParamBlock([1e9, 2e9, 3e9], data))
    lines = text.splitlines()
    assert lines[0] == "# GHz S RI R 50"
    assert lines[1:] == [f"{k} 0 0 1 0 1 0 0 0" for k in (1, 2, 3)]


def wilkinson_block(ratio=0.5333):
    d = wilkinson.design(50.0, ratio, F0)
    return wilkinson.analyze(d, np.linspace(7.6e9, 8.4e9, 81)).sparams


def test_wilkinson_round_trip_exact(tmp_path):
    block = wilkinson_block()
    p = tmp_path / "w.s3p"
    write_touchstone(block, p)
    back = read_touchstone(p)
    assert np.array_equal(back.data, block.data)
    assert np.array_equal(back.freqs, block.freqs)
    q = tmp_path / "w2.s3p"
    write_touchstone(back, q)
    assert p.read_bytes() == q.read_bytes()


def test_ma_round_trip(tmp_path):
    block = wilkinson_block()
    text = format_touchstone(block, "MA")
    assert text.splitlines()[0] == "# GHz S MA R 50"
    back = parse_touchstone(text, 3)
    assert np.max(np.abs(back.data - block.data)) < 1e-15
    # Polar conversion costs an ulp, so MA is value-stable rather than byte-stable.
    again = parse_touchstone(format_touchstone(back, "MA"), 3)
    assert np.max(np.abs(again.data - back.data)) < 1e-15


@settings(max_examples=60)
@given(st.lists(st.floats(1e3, 1e12), min_size=1, max_size=8, unique=True),
       st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_random_block_round_trip(freqs, n, seed):
    f = np.sort(np.array(freqs))
    if np.any(np.diff(f) <= 0):
        return
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((f.size, n, n)) + 1j * rng.standard_normal((f.size, n, n))
    data *= 10.0 ** rng.integers(-20, 5, size=data.shape)
    text = format_touchstone(SParamBlock(f, data, np.full(n, 37.5)))
    back = parse_touchstone(text, n)
    assert np.array_equal(back.freqs, f) and np.array_equal(back.data, data)
    assert np.all(back.zref == 37.5)
    assert format_touchstone(back) == text


def test_two_port_order_and_db_and_continuation():
    # S11 S21 S12 S22 order in the file; DB data split across two lines.
    text = "! comment\n# MHz S DB R 25\n1000 0 0 -6.0205999132796239 90\n  0 0 -200 0\n"
    b = parse_touchstone(text)
    assert b.freqs[0] == 1e9 and b.zref[0] == 25
    assert b.data[0, 1, 0] == pytest.approx(0.5j)
    assert b.data[0, 0, 1] == pytest.approx(1)
    assert abs(b.data[0, 1, 1]) == pytest.approx(1e-10)


@pytest.mark.parametrize("text, line, msg", [
    ("# GHz S RI R 50\n# GHz S RI R 50\n1 0 0 1 0 1 0 0 0\n", 2, "second option"),
    ("1 0 0 1 0 1 0 0 0\n# GHz S RI R 50\n", 1, "before option"),
    ("# GHz S RI R 50\n2 0 0 1 0 1 0 0 0\n1 0 0 1 0 1 0 0 0\n", 3, "increasing"),
    ("# GHz S RI R 50\n1 0 0 1 0 1 0 0 0\n1 0 0 1 0 1 0 0 0\n", 3, "increasing"),
    ("# GHz S RI R 50\n1 0 0 1 0 1 0 0 0\n2 0 0 1 0 1 0 0\n", 3, "expected 9"),
    ("# GHz S RI X 50\n1 0 0 1 0 1 0 0 0\n", 1, "malformed option"),
    ("# GHz S RI R\n1 0 0 1 0 1 0 0 0\n", 1, "malformed option"),
    ("# GHz Y RI R 50\n1 0 0 1 0 1 0 0 0\n", 1, "S-parameter"),
    ("# GHz S RI R 50\n1 0 0 1 0 1 0 0 zz\n", 2, "bad number"),
])
def test_touchstone_parse_errors(text, line, msg):
    with pytest.raises(ParseError, match=msg) as ei:
        parse_touchstone(text, 2, source="x.s2p")
    assert ei.value.line == line
    assert str(ei.value).startswith(f"x.s2p:{line}:")


def test_mixed_reference_rejected():
    block = SParamBlock([1e9], np.zeros((1, 2, 2)), [25.0, 50.0])
    with pytest.raises(ParameterError, match="one reference"):
        format_touchstone(block)


def test_port_count_from_file_name(tmp_path):
    p = tmp_path / "x.s1p"
    p.write_text("# GHz S RI R 50\n1 0.5 0\n2 0.25 0\n")
    assert read_touchstone(p).ports == 1


# ---------------------------------------------------------------- CSV

def test_csv_format():
    text = format_csv(["pin_dbm", "pout_dbm", "gain_db"], [(1.0, 2.5, np.float64(1.5)), (2.0, 3.0, 1.0)])
    assert text == "pin_dbm,pout_dbm,gain_db\n1.0,2.5,1.5\n2.0,3.0,1.0\n"


# ---------------------------------------------------------------- netlists

def test_parse_value_units():
    assert parse_value("100ohm") == 100
    assert parse_value("100OHM") == 100
    assert parse_value("0.4974nH", "L") == pytest.approx(0.4974e-9)
    assert parse_value("497.4PH", "L") == pytest.approx(0.4974e-9)
    assert parse_value("110fF", "C") == pytest.approx(110e-15)
    assert parse_value("1.5pf", "C") == pytest.approx(1.5e-12)
    assert parse_value("8", "F0") == 8e9
    assert parse_value("8GHz", "F0") == 8e9
    assert parse_value("1e-12", "C") == 1e-12
    for tok, what in [("10nH", "C"), ("5pF", "R"), ("abc", "R"), ("1..2", "R"), ("3kohm", "R")]:
        with pytest.raises(ValueError):
            parse_value(tok, what)


def test_parse_case_insensitive_keywords():
    text = "NODE a\nNode b\nr R1 a b 50OHM\ntl T1 b 0 50 45 8ghz\nport 1 a 50\nPort 2 b 50\n"
    net = parse_netlist(text)
    assert [e.kind for e in net.elements] == ["R", "TL"]
    assert net.elements[1].f0 == 8e9


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_netlists_round_trip(name):
    net = parse_netlist(shipped_text(name))
    text = serialize_netlist(net)
    again = parse_netlist(text)
    assert semantically_equal(net, again)
    assert serialize_netlist(again) == text


@pytest.mark.parametrize("text, line, msg", [
    ("node a\nR R1 a b 5ohm\nPORT 1 a 50\n", 2, "undeclared node 'b'"),
    ("node a\nR R1 a 0 5ohm\nR R1 a 0 5ohm\nPORT 1 a 50\n", 3, "defined twice"),
    ("node a\nnode a\n", 2, "declared twice"),
    ("node 0\n", 1, "implicit"),
    ("node a\nR R1 a 0 -5ohm\nPORT 1 a 50\n", 2, "positive"),
    ("node a\nQ Q1 a 0 1\n", 2, "unknown statement"),
    ("node a\nTL T a 0 50 90\nPORT 1 a 50\n", 2, "expected: TL"),
    ("node a\nR R1 a 0 5ohm\nPORT 1 a 50\nPORT 1 a 50\n", 4, "defined twice"),
    ("node a\nR R1 a 0 5ohm\nPORT 1 b 50\n", 3, "undeclared node"),
    ("node a\nR R1 a 0 5ohm\nPORT 2 a 50\n", 3, "without gaps"),
    ("node a\nnode b\nR R1 a 0 5ohm\nPORT 1 a 50\n", 2, "not connected"),
    ("node a\nR R1 a 0 5ohm\n", 2, "no ports"),
])
def test_netlist_errors_carry_line(text, line, msg):
    with pytest.raises(ParseError, match=msg) as ei:
        parse_netlist(text, source="t.net")
    assert ei.value.line == line


def _connectivity_ok(lines):
    """Independent check: declared nodes all reach ground; ports numbered 1..N."""
    nodes, adj, ports = set(), {}, []
    for raw in lines:
        tok = raw.split("#", 1)[0].split()
        if not tok:
            continue
        head = tok[0].upper()
        if head == "NODE":
            nodes.add(tok[1])
            continue
        if head == "PORT":
            ports.append(int(tok[1]))
            pairs = [(tok[2], "0")]
        elif head == "TL":
            pairs = [(tok[2], tok[3]), (tok[2], "0"), (tok[3], "0")]
        else:
            pairs = [(tok[2], tok[3])]
        for a, b in pairs:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
    seen, queue = {"0"}, deque(["0"])
    while queue:
        for m in adj.get(queue.popleft(), ()):
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return nodes <= seen and sorted(ports) == list(range(1, len(ports) + 1)) and bool(ports)


@pytest.mark.parametrize("name", SHIPPED)
def test_every_line_removal_is_caught(name):
    lines = shipped_text(name).splitlines()
    removable = [i for i, ln in enumerate(lines) if ln.split("#", 1)[0].strip()]
    caught = 0
    for i in removable:
        mutated = lines[:i] + lines[i + 1:]
        text = "\n".join(mutated) + "\n"
        is_node = lines[i].split()[0].lower() == "node"
        if is_node or not _connectivity_ok(mutated):
            with pytest.raises(ParseError) as ei:
                parse_netlist(text)
            assert ei.value.line is not None and 1 <= ei.value.line <= len(mutated)
            caught += 1
        else:
            parse_netlist(text)
    assert caught >= sum(1 for ln in lines if ln.lower().startswith("node "))


def test_read_netlist_reports_path(tmp_path):
    p = tmp_path / "bad.net"
    p.write_text("node a\nR R1 a zz 1ohm\n")
    with pytest.raises(ParseError) as ei:
        read_netlist(p)
    assert str(ei.value).startswith(f"{p}:2:")


def test_serializer_rejects_floating_port_reference():
    from qadpa.solver import Port

    net = parse_netlist("node a\nnode b\nR R a b 1ohm\nR R2 b 0 1ohm\nPORT 1 a 50\n")
    net.ports = [Port(1, "a", 50.0, ref_node="b")]
    with pytest.raises(ParameterError):
        serialize_netlist(net)


# ---------------------------------------------------------------- CLI

def run(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_backoff_cli(capsys):
    assert run(["backoff", "--delta", "1"], capsys)[:2] == (0, "-3.0103 dB\n")
    assert run(["backoff", "--obo", "-7.5"], capsys)[:2] == (0, "delta = 2.1502\n")
    assert run(["backoff", "--delta", "-1"], capsys)[0] == 2


@pytest.mark.parametrize("argv", [
    ["backoff", "--delta", "1", "--bogus"],
    ["backoff"],
    ["frobnicate"],
    ["backoff", "--delta", "1", "--obo", "3"],
    ["synth-match", "--zsrc", "1,2,3", "--zint", "25", "--ztgt", "50", "--f0", "8e9",
     "--phase", "120"],
    ["harmonics", "--stages", "1:0", "--drive", "1"],
])
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as ei:
        main(argv)
    assert ei.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_wilkinson_cli_and_analyze(tmp_path, capsys):
    net = tmp_path / "w.net"
    rc, _, _ = run(["synth-wilkinson", "--z0", "50", "--ratio", "1.0", "--f0", "8e9",
                    "--out-netlist", str(net)], capsys)
    assert rc == 0
    parsed = read_netlist(net)
    z = sorted(e.z0 for e in parsed.elements if e.kind == "TL" and e.name.startswith("TL"))
    assert z == pytest.approx([70.711, 70.711], abs=1e-3)
    rb = [e.value for e in parsed.elements if e.kind == "R"]
    assert rb == pytest.approx([100.0])
    out = tmp_path / "w.s3p"
    rc, _, _ = run(["analyze", str(net), "--fstart", "7.6e9", "--fstop", "8.4e9",
                    "--points", "81", "--out", str(out)], capsys)
    assert rc == 0
    block = read_touchstone(out)
    k = int(np.argmin(np.abs(block.freqs - F0)))
    assert block.freqs[k] == F0
    assert abs(block.data[k, 1, 0]) ** 2 == pytest.approx(0.5, abs=1e-6)
    assert out.read_text().splitlines()[41].startswith("8 ")


def test_synth_wilkinson_stdout(capsys):
    rc, text, _ = run(["synth-wilkinson", "--z0", "50", "--ratio", "0.5333333333333333",
                       "--f0", "8e9"], capsys)
    assert rc == 0
    net = parse_netlist(text)
    assert len(net.ports) == 3


def test_analyze_numerical_failure_exit_3(tmp_path, capsys):
    p = tmp_path / "half.net"
    p.write_text("node a\nnode b\nTL T a b 50 90 8\nPORT 1 a 50\nPORT 2 b 50\n")
    rc, _, err = run(["analyze", str(p), "--fstart", "15e9", "--fstop", "17e9", "--points", "3",
                      "--out", str(tmp_path / "h.s2p")], capsys)
    assert rc == 3 and "1.6e+10 Hz" in err
    assert not (tmp_path / "h.s2p").exists()


def test_analyze_input_errors_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.net"
    p.write_text("node a\nR R a zz 1ohm\n")
    rc, _, err = run(["analyze", str(p), "--fstart", "1e9", "--fstop", "2e9", "--points", "3"], capsys)
    assert rc == 2 and "bad.net:2:" in err
    rc, _, _ = run(["analyze", str(tmp_path / "missing.net"), "--fstart", "1e9", "--fstop", "2e9",
                    "--points", "3"], capsys)
    assert rc == 2
    ok = tmp_path / "ok.net"
    ok.write_text("node a\nR R a 0 50ohm\nPORT 1 a 50\n")
    rc, _, _ = run(["analyze", str(ok), "--fstart", "2e9", "--fstop", "1e9", "--points", "3"], capsys)
    assert rc == 2
    rc, _, _ = run(["analyze", str(ok), "--fstart", "1e9", "--fstop", "2e9", "--points", "3",
                    "--out", str(tmp_path / "x.s2p")], capsys)
    assert rc == 2


def test_pi_equiv_cli(capsys):
    rc, text, _ = run(["pi-equiv", "--z0", "25", "--theta", "90", "--f0", "8e9"], capsys)
    assert rc == 0
    lines = dict(ln.split(" = ") for ln in text.splitlines())
    assert float(lines["L_series"].split()[0]) == pytest.approx(0.4974, abs=1e-4)
    assert float(lines["C_shunt"].split()[0]) == pytest.approx(795.8, abs=0.1)


SYNTH = ["synth-match", "--zsrc", "10.6,5.7", "--zint", "25", "--ztgt", "50", "--f0", "8e9",
         "--phase", "120", "--population", "40", "--generations", "30"]


def test_synth_match_seed_and_env_override(monkeypatch, capsys):
    monkeypatch.delenv("QADPA_SEED", raising=False)
    rc, a, _ = run(SYNTH + ["--seed", "3"], capsys)
    assert rc == 0
    rec = json.loads(a)
    assert rec["seed"] == 3 and rec["spec"]["band_hz"] == [7.6e9, 8.4e9]
    monkeypatch.setenv("QADPA_SEED", "3")
    _, b, _ = run(SYNTH + ["--seed", "99"], capsys)
    assert a == b
    monkeypatch.setenv("QADPA_SEED", "x")
    assert run(SYNTH, capsys)[0] == 2


def test_synth_match_netlist(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("QADPA_SEED", raising=False)
    out = tmp_path / "m.net"
    rc, text, _ = run(SYNTH + ["--out-netlist", str(out)], capsys)
    assert rc == 0
    rec = json.loads(text)["result"]
    net = read_netlist(out)
    assert [e.z0 for e in net.elements] == [s["z0"] for s in rec["sections"]]


def test_doherty_curves_csv(tmp_path, capsys):
    out = tmp_path / "d.csv"
    rc, _, err = run(["doherty-curves", "--out", str(out)], capsys)
    assert rc == 0 and "OPBO" in err
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "pin_dbm,pout_dbm,gain_db"
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert rows.shape == (121, 3)
    assert np.max(rows[:, 1]) == pytest.approx(33.0, abs=0.1)
    assert rows[:, 2] == pytest.approx(rows[:, 1] - rows[:, 0])


def test_doherty_curves_bad_config(tmp_path, capsys):
    p = tmp_path / "c.cfg"
    p.write_text("[split]\n")
    assert run(["doherty-curves", "--config", str(p)], capsys)[0] == 2
    assert run(["doherty-curves", "--config", str(tmp_path / "nope.cfg")], capsys)[0] == 2


def test_harmonics_cli(capsys):
    rc, text, _ = run(["harmonics", "--stages", "1:0.5", "--drive", "1"], capsys)
    assert rc == 0
    lines = text.splitlines()
    assert lines[0] == "harmonic,power,dbc"
    h3 = lines[3].split(",")
    assert h3[0] == "3" and float(h3[2]) == pytest.approx(-12.906, abs=1e-3)
    assert run(["harmonics", "--stages", "1:0.5", "--drive", "0"], capsys)[0] == 3


def test_console_script_runs():
    r = subprocess.run(["qadpa", "backoff", "--delta", "1"], capture_output=True, text=True,
                       check=False)
    assert r.returncode == 0 and r.stdout == "-3.0103 dB\n"
    r = subprocess.run([sys.executable, "-m", "qadpa.cli", "backoff", "--nope"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 2 and "usage" in r.stderr


def test_atomic_write_leaves_no_temp_files(tmp_path):
    from qadpa.touchstone import atomic_write_text

    p = tmp_path / "a.txt"
    atomic_write_text(p, "one\n")
    atomic_write_text(p, "two\n")
    assert p.read_text() == "two\n"
    assert [x.name for x in tmp_path.iterdir()] == ["a.txt"]
    with pytest.raises(OSError):
        atomic_write_text(tmp_path / "nodir" / "b.txt", "x")
