"""Command line front end: ``ncrayleigh {point,sweep,verify,plot}``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional, Sequence, Tuple

from .errors import NcRayleighError
from .sweep import (
    FIGURES,
    METHODS,
    RESIDUAL_LIMIT,
    SweepConfig,
    emit_csv,
    emit_json,
    emit_plot_script,
    evaluate_row,
    figure_methods,
    format_value,
    read_csv,
    run_sweep,
    snr_grid,
    verify_point,
)

log = logging.getLogger("ncrayleigh")


def parse_nr_list(text: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"antenna counts must be positive integers, got {text!r}")
    return values


def parse_snr(text: str) -> Tuple[float, float, float]:
    """``start:stop:step`` or a single value."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            grid = (v, v, 1.0)
        elif len(parts) == 3:
            grid = tuple(float(v) for v in parts)
        else:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected start:stop:step or a number, got {text!r}") from None
    try:
        snr_grid(*grid)
    except NcRayleighError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return grid


def parse_methods(text: str) -> frozenset:
    if text.strip() == "all":
        return frozenset(METHODS)
    methods = frozenset(m.strip() for m in text.split(",") if m.strip())
    unknown = methods - set(METHODS)
    if unknown or not methods:
        raise argparse.ArgumentTypeError(f"unknown methods {sorted(unknown)}; choose from {', '.join(METHODS)} or all")
    return methods


def _common(p: argparse.ArgumentParser, snr_default: str, methods: bool = True) -> None:
    p.add_argument("--nr", type=parse_nr_list, default=(1,), help="receive antennas, e.g. 1,2,4")
    p.add_argument("--nt", type=int, default=1, help="transmit antennas (reference methods only)")
    p.add_argument("--snr-db", type=parse_snr, default=parse_snr(snr_default),
                   help="SNR in dB as start:stop:step or a single value")
    if methods:
        p.add_argument("--methods", type=parse_methods, default=frozenset({"sup"}),
                       help="comma-separated subset of %s, or all" % ",".join(METHODS))
    p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples for coherent")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncrayleigh",
        description="Capacity bounds for the non-coherent Rayleigh-fading multi-antenna channel.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    point = sub.add_parser("point", help="evaluate the methods at one operating point")
    _common(point, "0")
    point.add_argument("--format", choices=("text", "csv", "json"), default="text")
    point.add_argument("--units", choices=("nats", "bits"), default="nats")
    point.add_argument("--out", default="-")

    sweep = sub.add_parser("sweep", help="grid sweep over n_r and SNR")
    _common(sweep, "-10:30:5")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--units", choices=("nats", "bits"), default="nats")
    sweep.add_argument("--out", default="-", help="output file, - for stdout")

    verify = sub.add_parser("verify", help="check the output-law constraints and entropy identities")
    _common(verify, "0", methods=False)
    verify.add_argument("--zeta-scale", type=float, default=1.0,
                        help="multiply the optimal shape before checking (sensitivity test)")

    plot = sub.add_parser("plot", help="write a matplotlib script reproducing a capacity figure")
    _common(plot, "-10:30:2", methods=False)
    plot.add_argument("--figure", choices=sorted(FIGURES), required=True)
    plot.add_argument("--from-csv", dest="from_csv", default=None, help="reuse a sweep file instead of sweeping")
    plot.add_argument("--units", choices=("nats", "bits"), default="nats")
    plot.add_argument("--out", default="-")
    return parser


def _config(args, methods) -> SweepConfig:
    return SweepConfig(
        nr_list=args.nr,
        snr_db_grid=args.snr_db,
        methods=methods,
        nt=args.nt,
        samples=args.samples,
        seed=args.seed,
        output_path=getattr(args, "out", None),
        format="json" if getattr(args, "format", None) == "json" else "csv",
    )


def _emit(rows, args) -> None:
    if args.format == "json":
        emit_json(rows, args.out, args.units)
    else:
        emit_csv(rows, args.out, args.units)


def cmd_point(args) -> int:
    config = _config(args, args.methods)
    rows = [evaluate_row(n_r, snr, config) for n_r, snr in config.grid()]
    if args.format != "text":
        _emit(rows, args)
        return 0
    out: List[str] = []
    for row in rows:
        out.append(f"n_r={row.n_r} n_t={row.n_t} snr_db={row.snr_db:g} P={row.p_linear:.6g}")
        for col, v in row.as_dict(args.units).items():
            if col not in ("snr_db", "p_linear", "n_r", "n_t"):
                out.append(f"  {col:24s} {format_value(v)}")
        for method, msg in sorted(row.errors.items()):
            out.append(f"  {method:24s} unavailable ({msg})")
    text = "\n".join(out) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


def cmd_sweep(args) -> int:
    config = _config(args, args.methods)
    rows = run_sweep(config, args.workers)
    _emit(rows, args)
    for row in rows:
        for method, msg in sorted(row.errors.items()):
            print(f"n_r={row.n_r} snr_db={row.snr_db:g} {method}: {msg}", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    failed = 0
    header = None
    for n_r in sorted(set(args.nr)):
        for snr in snr_grid(*args.snr_db):
            rep = verify_point(n_r, snr, zeta_scale=args.zeta_scale, seed=args.seed)
            if header is None:
                header = ["n_r", "snr_db", "zeta"] + list(rep.residuals) + ["status"]
                print("  ".join(f"{h:>16s}" for h in header))
            cells = [f"{n_r:>16d}", f"{snr:>16g}", f"{rep.zeta:>16.9e}"]
            for name, v in rep.residuals.items():
                flag = "*" if v > RESIDUAL_LIMIT else " "
                cells.append(f"{v:>15.3e}{flag}")
            cells.append(f"{'ok' if rep.ok else 'FAIL':>16s}")
            print("  ".join(cells))
            failed += not rep.ok
    if failed:
        print(f"{failed} grid point(s) with a residual above {RESIDUAL_LIMIT:g}", file=sys.stderr)
        return 1
    return 0


def cmd_plot(args) -> int:
    if args.from_csv:
        rows = read_csv(args.from_csv)
    else:
        rows = run_sweep(_config(args, figure_methods(args.figure)), args.workers)
    emit_plot_script(rows, args.out, args.figure, args.units)
    return 0


COMMANDS = {"point": cmd_point, "sweep": cmd_sweep, "verify": cmd_verify, "plot": cmd_plot}


def _attach_negative_snr(argv: Sequence[str]) -> List[str]:
    # argparse takes "-10:30:5" for an option flag; glue it to --snr-db
    out: List[str] = []
    it = iter(argv)
    for tok in it:
        if tok == "--snr-db":
            nxt = next(it, None)
            if nxt is not None and nxt[:1] == "-" and nxt[1:2] in "0123456789.":
                out.append(f"--snr-db={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    args = parser.parse_args(_attach_negative_snr(argv))
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)
    try:
        return COMMANDS[args.command](args)
    except NcRayleighError as exc:
        print(f"ncrayleigh: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ncrayleigh: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
