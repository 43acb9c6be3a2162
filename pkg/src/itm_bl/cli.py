"""Command-line front end.

Usage:
    itm-bl solve --beta 0                      # Newton trace and f''(0)
    itm-bl sweep --beta-range -1:1:0.1 --out table.csv
    itm-bl profile --beta 0 --samples 200 --out profile.csv
    itm-bl boundary-study --beta 1 --eta-list 5,10,15
    itm-bl oracle-check --beta-list -0.9,0,1,2

Exit codes: 0 success, 1 solver non-convergence, 2 usage error, 3 I/O error.
Every command that writes ``--out`` also writes ``<out stem>.manifest.json``
next to it. Data files contain no timestamps, so identical flags give
byte-identical data files.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import InvalidParameterError, ITMError, RootFindingError
from .integrate import ADAPTIVE, FIXED_RK4, IntegratorConfig
from .model import ModelParams
from .shooting import ShootConfig, shoot_solve
from .solver import ROOT_METHODS, SolverConfig, boundary_study, solve, sweep

EXIT_OK = 0
EXIT_NONCONVERGENCE = 1
EXIT_USAGE = 2
EXIT_IO = 3

SIG_DIGITS = 9
MAX_RANGE_POINTS = 100_000
SWEEP_HEADER = ("beta", "fpp0", "h_star", "lambda", "iterations", "gamma_final")
PROFILE_HEADER = ("eta", "f", "fp", "fpp")
INTEGRATORS = {"rk4": FIXED_RK4, "adaptive": ADAPTIVE}
# options whose values may start with '-' (e.g. ``--beta-range -1:1:0.1``)
_VALUE_OPTIONS = ("--beta", "--beta-range", "--beta-list", "--bracket", "--eta-list")


class UsageError(Exception):
    pass


def format_number(x) -> str:
    """Shortest round-trip decimal, capped at 9 significant digits.

    >>> format_number(0.1)
    '0.1'
    >>> format_number(-0.6284752502917540)
    '-0.62847525'
    """
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    short = repr(x)
    mantissa = short.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
    if len(mantissa) <= SIG_DIGITS:
        return short
    return format(x, f".{SIG_DIGITS}g")


def parse_beta_range(text: str) -> list[float]:
    """``lo:hi:step`` with both ends inclusive.

    The point count is rounded when ``(hi - lo) / step`` is within 1e-6 of an
    integer, so ``-1:1:0.1`` gives 21 values despite binary rounding.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--beta-range expects lo:hi:step, got {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--beta-range has a non-numeric part: {text!r}") from None
    if not all(math.isfinite(v) for v in (lo, hi, step)):
        raise UsageError("--beta-range values must be finite")
    if step <= 0:
        raise UsageError("--beta-range step must be > 0")
    if hi < lo:
        raise UsageError("--beta-range needs lo <= hi")
    ratio = (hi - lo) / step
    n = round(ratio) if abs(ratio - round(ratio)) < 1e-6 else math.floor(ratio)
    if n + 1 > MAX_RANGE_POINTS:
        raise UsageError(f"--beta-range would produce {n + 1} points (limit {MAX_RANGE_POINTS})")
    return [round(lo + k * step, 12) for k in range(n + 1)]


def parse_float_list(text: str, flag: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if not values:
        raise UsageError(f"{flag} is empty")
    if not all(math.isfinite(v) for v in values):
        raise UsageError(f"{flag} values must be finite")
    return values


def parse_bracket(text: str) -> tuple[float, float]:
    values = parse_float_list(text, "--bracket")
    if len(values) != 2:
        raise UsageError(f"--bracket expects lo,hi, got {text!r}")
    lo, hi = values
    if not lo < hi:
        raise UsageError("--bracket needs lo < hi")
    return lo, hi


def _common(parser: argparse.ArgumentParser):
    g = parser.add_argument_group("solver")
    g.add_argument("--sigma", type=float, default=4.0, help="group exponent sigma (default 4)")
    g.add_argument("--eta-inf", type=float, default=5.0, help="truncated boundary in star variables (default 5)")
    g.add_argument("--tol", type=float, default=1e-9, help="tolerance on |Gamma| (default 1e-9)")
    g.add_argument("--h0", type=float, default=1.75, help="initial guess for h* (default 1.75)")
    g.add_argument("--method", choices=ROOT_METHODS, default="newton")
    g.add_argument("--bracket", help="lo,hi bracket for bisection (or to confine newton/secant)")
    g.add_argument("--integrator", choices=sorted(INTEGRATORS), default="rk4")
    g.add_argument("--step", type=float, default=0.01, help="RK4 step (default 0.01)")
    g.add_argument("--max-iter", type=int, default=50)
    o = parser.add_argument_group("output")
    o.add_argument("--out", help="write data here instead of stdout, plus a manifest alongside")
    o.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="itm-bl",
        description="Iterative transformation method for f''' + f f'' - beta f'^2 = 0 on [0, inf).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve for one beta and print the iteration trace")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=0, help="also store this many profile samples in --out")
    p.add_argument("--oracle", action="store_true", help="also run classic shooting on the matched domain")
    _common(p)

    p = sub.add_parser("sweep", help="solve for a list of beta values")
    betas = p.add_mutually_exclusive_group(required=True)
    betas.add_argument("--beta-range", help="lo:hi:step, both ends inclusive")
    betas.add_argument("--beta-list", help="comma-separated beta values")
    p.add_argument("--oracle", action="store_true", help="append shooting f''(0) and its difference")
    _common(p)

    p = sub.add_parser("profile", help="write the physical profile (eta, f, f', f'')")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=200)
    _common(p)

    p = sub.add_parser("boundary-study", help="f''(0) for several truncated boundaries")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--eta-list", default="5,10,15", help="comma-separated eta_inf* values")
    _common(p)

    p = sub.add_parser("oracle-check", help="compare the ITM with classic shooting")
    betas = p.add_mutually_exclusive_group()
    betas.add_argument("--beta", type=float)
    betas.add_argument("--beta-range")
    betas.add_argument("--beta-list")
    _common(p)
    return parser


def solver_config(args) -> SolverConfig:
    bracket = parse_bracket(args.bracket) if args.bracket else None
    if args.max_iter < 1:
        raise UsageError("--max-iter must be >= 1")
    integrator = IntegratorConfig(method=INTEGRATORS[args.integrator], step=args.step)
    return SolverConfig(
        params=ModelParams(beta=getattr(args, "beta", None) or 0.0, sigma=args.sigma),
        eta_inf_star=args.eta_inf,
        tol=args.tol,
        h0_star=args.h0,
        integrator=integrator,
        method=args.method,
        bracket=bracket,
        max_iter=args.max_iter,
        profile_samples=getattr(args, "samples", 0) or 0,
    )


def _betas(args) -> list[float]:
    if getattr(args, "beta_range", None):
        return parse_beta_range(args.beta_range)
    if getattr(args, "beta_list", None):
        return parse_float_list(args.beta_list, "--beta-list")
    return [args.beta if args.beta is not None else 0.0]


def config_echo(cfg) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def render(header: Sequence[str], rows: Sequence[Sequence], fmt: str) -> str:
    if fmt == "json":
        records = [
            {k: (v if isinstance(v, (int, str)) else _json_number(v)) for k, v in zip(header, row)} for row in rows
        ]
        return json.dumps(records, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else format_number(v) for v in row])
    return buf.getvalue()


def _json_number(v):
    v = float(v)
    if not math.isfinite(v):
        return None
    return float(format_number(v))


def emit(text: str, args, command: str, config: dict, extra: dict | None = None):
    """Write ``text`` to ``--out`` (plus manifest) or stdout."""
    if not args.out:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    manifest_path = out.with_name(out.stem + ".manifest.json")
    manifest = {
        "command": command,
        "argv": args.argv,
        "config": config,
        "artifacts": [str(out)],
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "version": __version__,
    }
    if extra:
        manifest.update(extra)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {out}", file=sys.stderr)


def _oracle(beta: float, lam: float, cfg: SolverConfig) -> float:
    """Shooting f''(0) on the physical domain matching ``cfg.eta_inf_star``."""
    s, _ = shoot_solve(
        ShootConfig(beta=beta, eta_inf=lam * cfg.eta_inf_star, s0=-0.6, integrator=cfg.integrator)
    )
    return s


def cmd_solve(args) -> int:
    cfg = solver_config(args)
    try:
        res = solve(cfg)
    except RootFindingError as exc:
        if exc.trace is not None:
            _print_trace(exc.trace)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    _print_trace(res.trace)
    print(f"f''(0) = {res.fpp0:.6f}")
    oracle = None
    if args.oracle:
        oracle = _oracle(res.beta, res.lam, cfg)
        print(f"shooting f''(0) = {oracle:.6f}  difference = {oracle - res.fpp0:.3e}")
    if args.out:
        header = list(SWEEP_HEADER)
        row = [res.beta, res.fpp0, res.h_star, res.lam, res.iterations, res.trace.final.fx]
        if oracle is not None:
            header += ["fpp0_oracle", "oracle_diff"]
            row += [oracle, oracle - res.fpp0]
        text = render(header, [row], args.format)
        extra = None
        if res.profile is not None:
            prof = Path(args.out).with_name(Path(args.out).stem + ".profile." + args.format)
            _write(prof, render(PROFILE_HEADER, _profile_rows(res.profile), args.format))
            extra = {"artifacts": [args.out, str(prof)]}
        emit(text, args, "solve", config_echo(cfg), extra)
    return EXIT_OK


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _print_trace(trace):
    print(f"{'iteration':>9}  {'h*':>14}  {'lambda':>12}  {'Gamma(h*)':>14}")
    for r in trace.records:
        lam = f"{r.aux:12.6f}" if r.aux is not None else f"{'-':>12}"
        print(f"{r.iteration:>9d}  {r.x:14.6f}  {lam}  {r.fx:14.6e}")


def _profile_rows(traj):
    return [tuple(float(v) for v in (e, *s)) for e, s in zip(traj.eta, traj.states)]


def cmd_sweep(args) -> int:
    cfg = solver_config(args)
    results = sweep(_betas(args), cfg)
    header = list(SWEEP_HEADER)
    if args.oracle:
        header += ["fpp0_oracle", "oracle_diff"]
    rows = []
    status = EXIT_OK
    for r in results:
        if r.converged:
            row = [r.beta, r.fpp0, r.h_star, r.lam, r.iterations, r.trace.final.fx]
            if args.oracle:
                try:
                    s = _oracle(r.beta, r.lam, cfg.with_beta(r.beta))
                except ITMError as exc:
                    print(f"warning: oracle failed for beta = {r.beta}: {exc}", file=sys.stderr)
                    s = math.nan
                row += [s, s - r.fpp0]
        else:
            print(f"warning: beta = {r.beta} did not converge: {r.error}", file=sys.stderr)
            status = EXIT_NONCONVERGENCE
            row = [r.beta] + [math.nan] * (len(header) - 1)
        rows.append(row)
    emit(render(header, rows, args.format), args, "sweep", config_echo(cfg))
    return status


def cmd_profile(args) -> int:
    if args.samples < 2:
        raise UsageError("--samples must be >= 2")
    cfg = solver_config(args)
    res = solve(cfg)
    emit(render(PROFILE_HEADER, _profile_rows(res.profile), args.format), args, "profile", config_echo(cfg))
    return EXIT_OK


def cmd_boundary_study(args) -> int:
    etas = parse_float_list(args.eta_list, "--eta-list")
    if any(e <= 0 for e in etas):
        raise UsageError("--eta-list values must be > 0")
    cfg = solver_config(args)
    rows = boundary_study(cfg.beta, etas, cfg)
    emit(render(("eta_inf_star", "fpp0"), rows, args.format), args, "boundary-study", config_echo(cfg))
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    cfg = solver_config(args)
    rows = []
    status = EXIT_OK
    print(f"{'beta':>8}  {'ITM':>14}  {'shooting':>14}  {'difference':>11}")
    for beta in _betas(args):
        c = cfg.with_beta(beta)
        try:
            res = solve(c)
            s = _oracle(beta, res.lam, c)
        except ITMError as exc:
            print(f"{beta:>8g}  failed: {exc}")
            rows.append([beta, math.nan, math.nan, math.nan])
            status = EXIT_NONCONVERGENCE
            continue
        print(f"{beta:>8g}  {res.fpp0:14.9f}  {s:14.9f}  {s - res.fpp0:11.3e}")
        rows.append([beta, res.fpp0, s, s - res.fpp0])
    if args.out:
        emit(render(("beta", "fpp0_itm", "fpp0_shooting", "difference"), rows, args.format), args, "oracle-check", config_echo(cfg))
    return status


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "profile": cmd_profile,
    "boundary-study": cmd_boundary_study,
    "oracle-check": cmd_oracle_check,
}


def _normalise(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_OPTIONS and i + 1 < len(argv):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_normalise(argv))
    args.argv = argv
    try:
        return COMMANDS[args.command](args)
    except (UsageError, InvalidParameterError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RootFindingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    except ITMError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
