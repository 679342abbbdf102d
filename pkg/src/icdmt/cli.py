"""Command-line front end.

Exit codes: 0 success, 1 failed verification, 2 unsupported closed form,
3 verification timeout, 4 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import checks
from . import closed_form as cf
from .channel import (
    AntennaProfile,
    ChannelFileError,
    ScalingProfile,
    achievable_region,
    load_channel,
    region_gap,
    upper_region,
)
from .curves import PiecewiseCurve
from .outage import estimate_outage

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_UNSUPPORTED = 2
EXIT_TIMEOUT = 3
EXIT_INPUT = 4

OUTPUT_ENV = "ICDMT_OUTPUT_DIR"
BOUND_NAMES = ("optimal", "alpha1", "mac", "nocsit-asym")


class InputError(ValueError):
    """Invalid command-line input (exit code 4)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument types
# ---------------------------------------------------------------------------

def parse_number(text: str) -> float:
    """Decimal or simple fraction such as ``1/3``."""
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}")


def parse_range(text: str) -> tuple[float, Optional[float], float]:
    """``start:stop:step``; ``stop`` may be ``auto``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}")
    start = parse_number(parts[0])
    stop = None if parts[1].strip() == "auto" else parse_number(parts[1])
    step = parse_number(parts[2])
    if step <= 0 or start < 0 or (stop is not None and stop < start):
        raise argparse.ArgumentTypeError(f"invalid range {text!r}")
    return start, stop, step


def parse_list(text: str) -> list[float]:
    return [parse_number(t) for t in text.split(",") if t.strip()]


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    count = int(math.floor((stop - start) / step + 1e-9))
    return np.round(start + step * np.arange(count + 1), 12)


def _sweep(text: str) -> tuple[float, ...]:
    try:
        if ":" not in text:
            return tuple(parse_list(text))
        start, stop, step = parse_range(text)
    except argparse.ArgumentTypeError as exc:
        raise InputError(str(exc)) from exc
    if stop is None:
        raise InputError("an SNR sweep needs an explicit stop value")
    return tuple(float(x) for x in _grid(start, stop, step))


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _output_dir(args) -> Optional[Path]:
    target = args.output or os.environ.get(OUTPUT_ENV)
    if not target:
        return None
    path = Path(target)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, name: str, text: str, out) -> None:
    """Write ``text`` into the output directory, or to ``out`` if none is set."""
    directory = _output_dir(args)
    if directory is None:
        out.write(text)
        if not text.endswith("\n"):
            out.write("\n")
        return
    (directory / name).write_text(text)
    print(f"wrote {directory / name}", file=sys.stderr)


def _rows_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _curve_text(curve: PiecewiseCurve, fmt: str) -> str:
    return curve.to_json() + "\n" if fmt == "json" else curve.to_csv()


# ---------------------------------------------------------------------------
# dmt
# ---------------------------------------------------------------------------

def _selectors(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    out = []
    for item in items:
        if item == "all":
            out.extend(str(k) for k in range(1, 8))
        elif item in BOUND_NAMES or item in {str(k) for k in range(1, 8)}:
            out.append(item)
        else:
            raise InputError(f"unknown bound {item!r}")
    return list(dict.fromkeys(out))


def _pair_function(sel: str, args) -> Callable[[float, float], float]:
    """Value of selector ``sel`` at the rate pair ``(r1, r2)``."""
    n, a = args.n, args.alpha
    if sel.isdigit():
        k = int(sel)
        return lambda r1, r2: cf.d_bound(k, n, a, r1, r2)
    if sel == "optimal":
        return lambda r1, r2: cf.d_ic_optimal(n, a, r1, r2)
    if sel == "alpha1":
        return lambda r1, r2: cf.d_ic_alpha1(n, r1, r2)
    if sel == "nocsit-asym":
        m, n1, n2 = _asym_params(args)
        return lambda r1, r2: cf.d_ic_nocsit_asym(m, n1, n2, a, r1, r2)
    if sel == "mac":
        def mac(r1, r2):
            if abs(r1 - r2) > 1e-12:
                raise InputError("the mac curve is defined on the symmetric line r1 = r2")
            return cf.d_mac(n, a, r1)
        return mac
    raise InputError(f"unknown bound {sel!r}")


def _asym_params(args) -> tuple[int, int, int]:
    if args.M is None or args.N1 is None or args.N2 is None:
        raise InputError("nocsit-asym needs --M, --N1 and --N2")
    return args.M, args.N1, args.N2


def _native_function(sel: str, args) -> tuple[Callable[[float], float], float]:
    """Curve of a numbered bound in its own rate argument, and its support end."""
    n, a = args.n, args.alpha
    k = int(sel)
    fn = {1: lambda x: cf.d_o_single(n, x), 2: lambda x: cf.d_o_single(n, x),
          3: lambda x: cf.d_o3(n, a, x), 4: lambda x: cf.d_o3(n, a, x),
          5: lambda x: cf.d_o5(n, a, x), 6: lambda x: cf.d_o6(n, a, x),
          7: lambda x: cf.d_o6(n, a, x)}[k]
    return fn, cf.support_end(k, n, a)


def _label(sel: str) -> str:
    return f"b{sel}" if sel.isdigit() else sel


def cmd_dmt(args, out) -> int:
    sels = _selectors(args.bound)
    if args.alpha < 0:
        raise InputError("alpha must be >= 0")
    if (args.r1 is None) != (args.r2 is None):
        raise InputError("--r1 and --r2 must be given together")

    if args.r1 is not None:
        rows = [(_label(s), _pair_function(s, args)(args.r1, args.r2)) for s in sels]
        if args.format == "json":
            text = json.dumps({lab: v for lab, v in rows}, indent=2)
        else:
            text = _rows_csv(("bound", "d"), rows)
        _emit(args, f"dmt_point.{args.format}", text, out)
        return EXIT_OK

    start, stop, step = args.r_sum_grid
    curves = []
    if args.symmetric_rate:
        end = stop if stop is not None else float(args.n if "nocsit-asym" not in sels
                                                  else _asym_params(args)[0])
        grid = _grid(start, end, step)
        for s in sels:
            f = _pair_function(s, args)
            curves.append((_label(s), grid, [f(r, r) for r in grid]))
        numbered = [s for s in sels if s.isdigit()]
        if len(numbered) == 7:
            vals = np.min([c[2] for c in curves if c[0].startswith("b")], axis=0)
            curves.append(("min", grid, list(vals)))
    else:
        named = [s for s in sels if not s.isdigit()]
        if named:
            raise InputError(f"{', '.join(named)} need --symmetric-rate or --r1/--r2")
        for s in sels:
            fn, support = _native_function(s, args)
            grid = _grid(start, stop if stop is not None else support, step)
            curves.append((_label(s), grid, [fn(float(x)) for x in grid]))

    for label, grid, vals in curves:
        if args.breakpoints:
            curve = PiecewiseCurve.from_samples(grid, vals, label=label)
        else:
            curve = PiecewiseCurve(tuple((float(r), float(d)) for r, d in zip(grid, vals)), label)
        text = _curve_text(curve, args.format)
        if _output_dir(args) is None and len(curves) > 1:
            text = f"# {label}\n" + text
        _emit(args, f"dmt_{label}.{args.format}", text, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _report(args, name: str, rows: list[dict], out) -> None:
    if args.format == "json":
        text = json.dumps(rows, indent=2)
    else:
        header = list(rows[0].keys()) if rows else ["check"]
        text = _rows_csv(header, [[r[h] for h in header] for r in rows])
    _emit(args, f"verify_{name}.{args.format}", text, out)


def cmd_verify(args, out) -> int:
    if args.check == "continuity":
        alphas = args.alpha_set or [args.alpha]
        results = []
        for n in args.n_set or [args.n]:
            for a in alphas:
                results.extend(checks.continuity_checks(n, a))
            results.extend(checks.alpha_continuity_checks(n))
        rows = [r.row() for r in results]
        _report(args, "continuity", rows, out)
        return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED

    if args.check == "normalization":
        rep = checks.normalization_report(args.n, args.alpha, args.step, workers=args.threads)
        rep["argmin"] = json.dumps(rep["argmin"])
        _report(args, "normalization", [rep], out)
        if rep["negative"]:
            print(f"warning: minimum {rep['value']:g} is negative", file=sys.stderr)
        return EXIT_OK

    # oracle
    if args.n > 2 and not args.force:
        raise InputError("oracle runs are limited to n <= 2; pass --force to override")
    if args.bound not in ("ptp", "1", "2", "5"):
        raise InputError("the numeric oracle covers --bound ptp, 1, 2 or 5")
    kind = "5" if args.bound == "5" else "ptp"
    variants = {"both": (False, True), "typical": (True,), "unrestricted": (False,)}[args.variant]
    try:
        rows = checks.oracle_rows(kind, args.n, args.alpha if kind == "5" else 0.0,
                                  args.step, args.refine, variants=variants,
                                  p=args.p, q=args.q, workers=args.threads,
                                  timeout=args.timeout)
    except checks.VerificationTimeout as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    _report(args, "oracle", rows, out)
    summary = {}
    for r in rows:
        s = summary.setdefault(r["variant"], [0.0, True])
        s[0] = max(s[0], r["deviation"])
        s[1] = s[1] and r["passed"]
    for v, (dev, ok) in summary.items():
        print(f"{v}: max deviation {dev:.6g} -> {'pass' if ok else 'fail'}", file=sys.stderr)
    # any matching variant counts as agreement; the report keeps both
    return EXIT_OK if any(ok for _, ok in summary.values()) else EXIT_FAILED


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _profile(args) -> AntennaProfile:
    counts = (args.m1, args.n1, args.m2, args.n2)
    if any(c is not None for c in counts):
        if any(c is None for c in counts):
            raise InputError("--m1, --n1, --m2 and --n2 must be given together")
        return AntennaProfile(*counts)
    return AntennaProfile.symmetric(args.n)


def _reference(profile: AntennaProfile, alpha: float, bound: int, r1: float, r2: float):
    if not profile.is_symmetric():
        return None
    try:
        return cf.d_bound(bound, profile.m1, alpha, r1, r2)
    except cf.UnsupportedClosedForm:
        return None


def cmd_simulate(args, out) -> int:
    if args.bound not in {str(k) for k in range(1, 8)}:
        raise InputError("simulate needs a single numbered --bound in 1..7")
    bound = int(args.bound)
    profile = _profile(args)
    scaling = ScalingProfile(args.alpha, _sweep(args.snr_db))
    r1 = args.r1 or 0.0
    r2 = args.r2 or 0.0
    est = estimate_outage(profile, scaling, bound, r1, r2, args.trials, args.seed,
                          chunk=args.chunk, workers=args.threads)
    ref = _reference(profile, args.alpha, bound, r1, r2)
    meta = est.sidecar(reference_diversity=ref,
                       profile=[profile.m1, profile.n1, profile.m2, profile.n2])
    stem = f"simulate_b{bound}"
    if args.format == "json":
        _emit(args, f"{stem}.json",
              json.dumps({"rows": _estimate_rows(est), "meta": meta}, indent=2), out)
    else:
        _emit(args, f"{stem}.csv", est.to_csv(), out)
        directory = _output_dir(args)
        if directory is not None:
            (directory / f"{stem}.meta.json").write_text(est.sidecar_json(
                reference_diversity=ref, profile=meta["profile"]))
    slope = "unresolved" if not est.resolved else f"{est.slope:.4f} +/- {est.slope_std_err:.4f}"
    print(f"fitted slope {slope}; closed-form reference "
          f"{'n/a' if ref is None else f'{ref:g}'}", file=sys.stderr)
    if est.warning:
        print(f"warning: {est.warning}", file=sys.stderr)
    return EXIT_OK


def _estimate_rows(est) -> list[dict]:
    lo, hi = est.wilson_interval
    return [{"rho_db": est.rho_db[k], "p_out": float(est.p_out[k]), "ci_low": float(lo[k]),
             "ci_high": float(hi[k]), "trials": est.trials} for k in range(len(est.rho_db))]


# ---------------------------------------------------------------------------
# region
# ---------------------------------------------------------------------------

REGION_COLUMNS = ("rho_db", "bound", "a1", "a2", "upper_rhs", "achievable_rhs", "gap")


def cmd_region(args, out) -> int:
    try:
        h = load_channel(args.channel)
    except ChannelFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    profile = h.profile
    rows = []
    for db in _sweep(args.snr_db):
        rho = 10.0 ** (db / 10.0)
        up = upper_region(h, rho, args.alpha)
        ach = achievable_region(h, rho, args.alpha)
        for u, v in zip(up, ach):
            rows.append((float(db), u.bound, u.a1, u.a2, float(u.rhs), float(v.rhs),
                         float(region_gap(profile, u.bound))))
    if args.format == "json":
        text = json.dumps([dict(zip(REGION_COLUMNS, r)) for r in rows], indent=2)
    else:
        text = _rows_csv(REGION_COLUMNS, rows)
    _emit(args, f"region.{args.format}", text, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=1, help="antennas per node, symmetric (default: 1)")
    p.add_argument("--alpha", type=parse_number, default=1.0,
                   help="cross-link exponent, decimal or fraction like 1/3 (default: 1)")
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="output format (default: csv)")
    p.add_argument("--output", default=None,
                   help=f"output directory (default: ${OUTPUT_ENV}, else stdout)")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default: 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icdmt", description=__doc__.splitlines()[0],
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    d = sub.add_parser("dmt", help="closed-form DMT curves or point values", formatter_class=fmt)
    _common(d)
    d.add_argument("--bound", default="all",
                   help="comma list of all, 1..7, optimal, alpha1, mac, nocsit-asym")
    d.add_argument("--r-sum-grid", type=parse_range, default=(0.0, None, 0.01),
                   help="rate grid start:stop:step; stop may be 'auto' (support end)")
    d.add_argument("--symmetric-rate", action="store_true",
                   help="evaluate on the line r1 = r2 = r instead of each bound's own argument")
    d.add_argument("--breakpoints", action="store_true",
                   help="emit compressed breakpoints instead of every grid sample")
    d.add_argument("--r1", type=parse_number, default=None, help="point mode: r1")
    d.add_argument("--r2", type=parse_number, default=None, help="point mode: r2")
    d.add_argument("--M", type=int, default=None, help="nocsit-asym: transmit antennas")
    d.add_argument("--N1", type=int, default=None, help="nocsit-asym: receiver 1 antennas")
    d.add_argument("--N2", type=int, default=None, help="nocsit-asym: receiver 2 antennas")

    v = sub.add_parser("verify", help="continuity, oracle and normalization checks",
                       formatter_class=fmt)
    v.add_argument("check", choices=("continuity", "oracle", "normalization"))
    _common(v)
    v.add_argument("--n-set", type=lambda t: [int(x) for x in parse_list(t)], default=None,
                   help="continuity: comma list of n (default: --n)")
    v.add_argument("--alpha-set", type=parse_list, default=None,
                   help="continuity: comma list of alpha (default: --alpha)")
    v.add_argument("--bound", default="5", help="oracle: 5, or ptp/1/2 for point-to-point")
    v.add_argument("--p", type=int, default=None, help="oracle ptp: transmit antennas (default: n)")
    v.add_argument("--q", type=int, default=None, help="oracle ptp: receive antennas (default: n)")
    v.add_argument("--step", type=parse_number, default=0.02, help="final grid step")
    v.add_argument("--refine", type=int, default=0, help="refinement rounds")
    v.add_argument("--variant", choices=("both", "typical", "unrestricted"), default="both",
                   help="oracle: search region for the fifth bound")
    v.add_argument("--timeout", type=float, default=600.0, help="wall-clock budget in seconds")
    v.add_argument("--force", action="store_true", help="allow oracle runs with n > 2")

    s = sub.add_parser("simulate", help="Monte-Carlo outage sweep", formatter_class=fmt)
    _common(s)
    s.add_argument("--bound", default="1", help="bound 1..7")
    s.add_argument("--r1", type=parse_number, default=0.0, help="multiplexing gain r1")
    s.add_argument("--r2", type=parse_number, default=0.0, help="multiplexing gain r2")
    s.add_argument("--snr-db", default="20:40:5", help="SNR sweep start:stop:step or list")
    s.add_argument("--trials", type=int, default=100_000, help="channel realisations")
    s.add_argument("--seed", type=int, default=42, help="64-bit seed")
    s.add_argument("--chunk", type=int, default=100_000, help="realisations per batch")
    for name in ("m1", "n1", "m2", "n2"):
        s.add_argument(f"--{name}", type=int, default=None,
                       help=f"asymmetric profile: {name.upper()} (default: --n)")

    r = sub.add_parser("region", help="upper and achievable rate regions of one channel",
                       formatter_class=fmt)
    _common(r)
    r.add_argument("--channel", required=True, help="channel realisation JSON file")
    r.add_argument("--snr-db", default="0", help="SNR values: list or start:stop:step")
    return parser


COMMANDS = {"dmt": cmd_dmt, "verify": cmd_verify, "simulate": cmd_simulate, "region": cmd_region}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise InputError("--threads must be >= 1")
        return COMMANDS[args.command](args, out)
    except cf.UnsupportedClosedForm as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
