"""``qadpa`` command-line entry point.

Exit status: 0 on success, 2 on invalid input (including usage errors),
3 when a numerical step fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from qadpa import doherty, wilkinson
from qadpa.errors import ParameterError, ParseError, QadpaError
from qadpa.matching import GAConfig, MatchSpec, pi_equivalent, synthesize_two_section
from qadpa.netlist_io import read_netlist, serialize_netlist
from qadpa.rfcore import TLineSection
from qadpa.solver import Element, Netlist, Port, solve_sparams
from qadpa.touchstone import atomic_write_text, format_csv, write_touchstone

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("qadpa")


class _Parser(argparse.ArgumentParser):
    # argparse already exits with 2 on usage errors; keep that explicit.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")


def _band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'f_lo,f_hi' in Hz, got {text!r}") from None
    return lo, hi


def _stages(text: str) -> list[doherty.StageClipper]:
    out = []
    for item in text.split(","):
        try:
            g, c = item.split(":")
            out.append(doherty.StageClipper(float(g), float(c)))
        except (ValueError, ParameterError):
            raise argparse.ArgumentTypeError(
                f"stage {item!r}: expected 'gain:clip' with positive numbers"
            ) from None
    return out


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        atomic_write_text(path, text)


def cmd_backoff(args) -> int:
    if args.delta is not None:
        print(f"{doherty.backoff_from_delta(args.delta):.4f} dB")
    else:
        print(f"delta = {doherty.delta_from_backoff(abs(args.obo)):.4f}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    net = read_netlist(args.netlist)
    if not (args.fstart > 0 and args.fstop > args.fstart and args.points >= 2):
        raise ParameterError("need 0 < fstart < fstop and at least 2 points")
    freqs = np.linspace(args.fstart, args.fstop, args.points)
    rep = solve_sparams(net, freqs)
    if rep.errors:
        for msg in rep.errors.values():
            print(f"solve failed: {msg}", file=sys.stderr)
        return EXIT_NUMERIC
    for k in rep.flagged:
        print(f"warning: ill-conditioned at {freqs[k]:.9g} Hz "
              f"(cond {rep.condition[k]:.3g})", file=sys.stderr)
    n = rep.sparams.ports
    out = args.out or f"out.s{n}p"
    if not out.lower().endswith(f".s{n}p"):
        raise ParameterError(f"output for a {n}-port must end in .s{n}p")
    write_touchstone(rep.sparams, out, fmt=args.format)
    return EXIT_OK


def _seed(args) -> int:
    env = os.environ.get("QADPA_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ParameterError(f"QADPA_SEED must be an integer, got {env!r}") from None
    return args.seed


def cmd_synth_match(args) -> int:
    spec = MatchSpec(
        z_source=args.zsrc,
        z_intermediate=args.zint,
        z_target=args.ztgt,
        f0=args.f0,
        band=args.band or (0.95 * args.f0, 1.05 * args.f0),
        phase_target=args.phase % 360.0,
        conjugate_mode=args.conjugate,
    )
    cfg = GAConfig(
        population=args.population,
        generations=args.generations,
        seed=_seed(args),
    )
    res = synthesize_two_section(spec, cfg)
    rec = {
        "spec": {
            "z_source": [spec.z_source.real, spec.z_source.imag],
            "z_intermediate": spec.z_intermediate,
            "z_target": spec.z_target,
            "f0_hz": spec.f0,
            "band_hz": list(spec.band),
            "phase_target_deg": spec.phase_target,
            "conjugate_mode": spec.conjugate_mode,
        },
        "seed": cfg.seed,
        "result": res.to_record(),
    }
    text = json.dumps(rec, indent=2, allow_nan=False) + "\n"
    _write(args.out, text)
    if args.out_netlist:
        (s1, s2) = res.sections
        net = Netlist(nodes=["1", "m", "2"])
        net.add(Element("TL", "TL1", "1", "m", z0=s1.z0, theta0=s1.theta0, f0=s1.f0))
        net.add(Element("TL", "TL2", "m", "2", z0=s2.z0, theta0=s2.theta0, f0=s2.f0))
        # Touchstone v1 carries one reference, so both ports use z_target.
        net.ports = [Port(1, "1", spec.z_target), Port(2, "2", spec.z_target)]
        zs = spec.z_source
        header = (
            f"two-section match, seed {cfg.seed}, source {zs.real:g}{zs.imag:+g}j ohm\n"
            f"|gamma| at f0 = {abs(res.gamma_at_f0):.6g}, S21 phase = {res.achieved_phase:.6g} deg"
        )
        atomic_write_text(args.out_netlist, serialize_netlist(net, header))
    if not res.feasible:
        print(f"warning: best design misses the constraints "
              f"(|gamma|={abs(res.gamma_at_f0):.4g}, phase error {res.phase_error:.3g} deg)",
              file=sys.stderr)
    return EXIT_OK


def cmd_synth_wilkinson(args) -> int:
    d = wilkinson.design(args.z0, args.ratio, args.f0, with_transformers=not args.no_transformers)
    net = wilkinson.to_netlist(d, lumped=args.lumped)
    header = (
        f"Wilkinson, P2/P3 = {args.ratio:g}, K^2 = {d.k_squared:.6g}\n"
        f"branch Z0 {d.branch2_z0:.6g} / {d.branch3_z0:.6g} ohm, bridge {d.bridge_resistor:.6g} ohm"
    )
    _write(args.out_netlist, serialize_netlist(net, header))
    return EXIT_OK


def cmd_pi_equiv(args) -> int:
    pi = pi_equivalent(TLineSection(args.z0, args.theta, args.f0))
    print(f"L_series = {pi.l_series * 1e9:.6g} nH")
    print(f"C_shunt = {pi.c_shunt * 1e15:.6g} fF")
    return EXIT_OK


def cmd_doherty_curves(args) -> int:
    cfg = doherty.load_chain_config(args.config)
    curves = doherty.chain_response(cfg.chain, cfg.pin_dbm)
    rows = zip(curves.pin_dbm, curves.pout_dbm, curves.gain_db)
    _write(args.out, format_csv(["pin_dbm", "pout_dbm", "gain_db"], rows))
    m = doherty.metrics(curves, cfg.aux_threshold)
    opbo = "n/a" if m.opbo_db is None else f"{m.opbo_db:.3f} dB"
    print(f"peak {m.peak_pout_dbm:.3f} dBm, gain {m.small_signal_gain_db:.3f} dB, "
          f"compression {m.compression_db:.3f} dB, OPBO {opbo}", file=sys.stderr)
    return EXIT_OK


def cmd_harmonics(args) -> int:
    res = doherty.harmonic_cascade(args.stages, args.drive)
    rows = [
        (1, res.fundamental_power, res.fundamental_dbc),
        (2, res.h2_power, res.h2_dbc),
        (3, res.h3_power, res.h3_dbc),
    ]
    _write(args.out, format_csv(["harmonic", "power", "dbc"], rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qadpa", description="Doherty-PA design and analysis tools")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="solve a netlist and write Touchstone")
    a.add_argument("netlist")
    a.add_argument("--fstart", type=float, required=True, help="Hz")
    a.add_argument("--fstop", type=float, required=True, help="Hz")
    a.add_argument("--points", type=int, required=True)
    a.add_argument("--out", help="output .sNp file")
    a.add_argument("--format", choices=["RI", "MA"], default="RI")
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("synth-match", help="two-section line match with phase target")
    m.add_argument("--zsrc", type=_complex, required=True, help="re,im in ohm")
    m.add_argument("--zint", type=float, required=True)
    m.add_argument("--ztgt", type=float, required=True)
    m.add_argument("--f0", type=float, required=True, help="Hz")
    m.add_argument("--band", type=_band, help="f_lo,f_hi in Hz (default f0 +-5%%)")
    m.add_argument("--phase", type=float, required=True, help="S21 phase target, degrees")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--population", type=int, default=200)
    m.add_argument("--generations", type=int, default=300)
    m.add_argument("--conjugate", action="store_true", help="match to the source conjugate")
    m.add_argument("--out", help="JSON result (default stdout)")
    m.add_argument("--out-netlist", help="also write the sections as a netlist")
    m.set_defaults(func=cmd_synth_match)

    w = sub.add_parser("synth-wilkinson", help="Wilkinson divider netlist")
    w.add_argument("--z0", type=float, required=True)
    w.add_argument("--ratio", type=float, required=True, help="power ratio P2/P3")
    w.add_argument("--f0", type=float, required=True, help="Hz")
    w.add_argument("--no-transformers", action="store_true")
    w.add_argument("--lumped", action="store_true", help="pi-equivalent L/C instead of lines")
    w.add_argument("--out-netlist", help="netlist file (default stdout)")
    w.set_defaults(func=cmd_synth_wilkinson)

    q = sub.add_parser("pi-equiv", help="lumped pi-equivalent of a line section")
    q.add_argument("--z0", type=float, required=True)
    q.add_argument("--theta", type=float, required=True, help="degrees")
    q.add_argument("--f0", type=float, required=True, help="Hz")
    q.set_defaults(func=cmd_pi_equiv)

    d = sub.add_parser("doherty-curves", help="behavioral chain sweep to CSV")
    d.add_argument("--config", help="chain config (default: shipped golden.cfg)")
    d.add_argument("--out", help="CSV file (default stdout)")
    d.set_defaults(func=cmd_doherty_curves)

    h = sub.add_parser("harmonics", help="clipped-stage harmonic levels to CSV")
    h.add_argument("--stages", type=_stages, required=True, help="gain:clip[,gain:clip...]")
    h.add_argument("--drive", type=float, required=True, help="input sine amplitude")
    h.add_argument("--out", help="CSV file (default stdout)")
    h.set_defaults(func=cmd_harmonics)

    b = sub.add_parser("backoff", help="output back-off vs. load-modulation factor")
    g = b.add_mutually_exclusive_group(required=True)
    g.add_argument("--delta", type=float)
    g.add_argument("--obo", type=float, help="back-off in dB (either sign)")
    b.set_defaults(func=cmd_backoff)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ParameterError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, np.linalg.LinAlgError, QadpaError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
