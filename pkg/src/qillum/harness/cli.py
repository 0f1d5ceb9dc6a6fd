"""Command-line entry point: ``qillum <subcommand> [flags]``.

Exit codes: 0 success, 2 usage or parse error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from qillum.channel import PortConvention, ProtocolParams
from qillum.harness import figures
from qillum.harness.convergence import TRACKED, convergence
from qillum.harness.rows import NUMERIC_ERRORS, Settings, encode, evaluate
from qillum.harness.sweep import DEFAULTS, ConfigError, header_comment, parse_angle, parse_config, run_sweep

EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 2, 3, 4

POINT_METRICS = {
    "snr": ("snr", "gain"),
    "gain": ("snr", "gain"),
    "gain-prime": ("gain_prime",),
    "qcb": ("qcb",),
    "helstrom": ("helstrom",),
}


class UsageError(Exception):
    pass


def _angle(text: str) -> float:
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _dims(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_point_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--state", choices=("cs", "tmss"), default="tmss")
    p.add_argument("--N", type=float, default=DEFAULTS["N"], help="mean signal photons")
    p.add_argument("--eta", type=float, default=DEFAULTS["eta"], help="environment BS reflectivity")
    p.add_argument("--p", type=float, default=DEFAULTS["p"], help="target BS reflectivity")
    phase = p.add_mutually_exclusive_group()
    phase.add_argument("--phi", type=_angle, default=None, help="phase shift in radians; accepts pi, pi/2, -pi")
    phase.add_argument("--cos2phi", type=float, default=None, help="set phi = arccos(sqrt(value))")
    p.add_argument("--nth", type=float, default=DEFAULTS["n_th"], help="environment thermal photons")
    p.add_argument("--nt", type=float, default=DEFAULTS["n_t"], help="target thermal photons")
    _add_numeric_flags(p)


def _add_numeric_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, default=20, help="Fock truncation per mode")
    p.add_argument("--tail-tol", type=float, default=1e-6, help="allowed probe truncation tail")
    p.add_argument(
        "--absent-port",
        choices=[c.value for c in PortConvention],
        default=PortConvention.RETURNED_SIGNAL.value,
        help="mode kept in the target-absent state",
    )
    p.add_argument("--timing", action="store_true", help="add a wall-clock column")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qillum", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in POINT_METRICS:
        p = sub.add_parser(name, help=f"evaluate {name} at one parameter point")
        _add_point_flags(p)
        if name == "snr":
            p.add_argument("--numeric", action="store_true", help="also compute the Fock-space SNR")
        p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("sweep", help="run a sweep config and write CSV")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("figure", help="reproduce one figure panel (CSV and PNG)")
    p.add_argument("recipe", choices=sorted(figures.RECIPES))
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-plot", action="store_true", help="write only the CSV")

    p = sub.add_parser("convergence", help="metric versus truncation dimension")
    _add_point_flags(p)
    p.add_argument("--dims", type=_dims, default=[5, 10, 15, 20])
    p.add_argument("--metric", choices=sorted(TRACKED), default="qcb")
    p.add_argument("--out", type=Path, default=None)
    return parser


def _params(args) -> ProtocolParams:
    if args.cos2phi is not None:
        if not 0.0 <= args.cos2phi <= 1.0:
            raise UsageError("--cos2phi must lie in [0, 1]")
        phi = math.acos(math.sqrt(args.cos2phi))
    else:
        phi = DEFAULTS["phi"] if args.phi is None else args.phi
    try:
        return ProtocolParams(N=args.N, eta=args.eta, p=args.p, phi=phi, n_th=args.nth, n_t=args.nt)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _settings(args, metrics) -> Settings:
    return Settings(
        state=args.state,
        dim=args.dim,
        tail_tol=args.tail_tol,
        convention=args.absent_port,
        metrics=tuple(metrics),
        timing=args.timing,
    )


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8", newline="\n")


def _run(args) -> int:
    if args.command in POINT_METRICS:
        metrics = list(POINT_METRICS[args.command])
        if getattr(args, "numeric", False):
            metrics.append("snr_num")
        settings = _settings(args, metrics)
        row = evaluate(_params(args), settings, catch=False)
        _emit(encode([row], settings.timing, header_comment()), args.out)
        return 0
    if args.command == "sweep":
        text = args.config.read_text(encoding="utf-8")
        spec = parse_config(text)
        run_sweep(spec, args.out, args.jobs)
        return 0
    if args.command == "figure":
        for path in figures.figure(args.recipe, args.out, args.jobs, plot=not args.no_plot):
            print(path)
        return 0
    if args.command == "convergence":
        settings = _settings(args, ())
        try:
            rows, conv = convergence(_params(args), settings, args.dims, args.metric)
        except ValueError as exc:
            if isinstance(exc, ArithmeticError):
                raise
            raise UsageError(str(exc)) from None
        text = encode(rows, settings.timing, header_comment())
        text += f"# converged_dim={conv if conv is not None else 'NA'} metric={args.metric} rtol=1e-4\n"
        _emit(text, args.out)
        print(f"converged_dim={conv if conv is not None else 'NA'}", file=sys.stderr)
        return 0
    raise UsageError(f"unknown command {args.command}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except (UsageError, ConfigError) as exc:
        print(f"qillum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"qillum: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"qillum: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"qillum: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
