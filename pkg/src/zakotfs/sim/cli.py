"""Command-line entry points.

``zakotfs`` runs a sweep and summarizes it; ``zakotfs-summarize`` re-renders
the summary of an existing ``results.csv``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, SimConfig, parse_config
from .report import summarize
from .sweep import run_sweep


def _floats(text: str):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _names(text: str):
    return tuple(v.strip().lower() for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="zakotfs",
        description="Zak-OTFS differential communication link-level sweep.",
    )
    p.add_argument("--config", type=Path, help="key = value configuration file")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--M", type=int, dest="M")
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--nu-p", type=float, dest="nu_p", help="Doppler period (Hz)")
    p.add_argument("--qam", type=int)
    p.add_argument("--scheme", type=_names, dest="schemes",
                   help="comma list of do, sp, separate, perfect")
    p.add_argument("--alpha", type=_floats, help="comma list of SP data fractions")
    p.add_argument("--snr", type=_floats, dest="snr_db", help="comma list of data SNRs (dB)")
    p.add_argument("--frames", type=int)
    p.add_argument("--realizations", type=int)
    p.add_argument("--pilot-period", type=int, dest="pilot_period")
    p.add_argument("--beta", type=float, help="RRC roll-off for delay and Doppler")
    p.add_argument("--no-plots", action="store_true", help="skip SVG summaries")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args) -> SimConfig:
    overrides = {
        "M": args.M, "N": args.N, "nu_p": args.nu_p, "qam": args.qam,
        "schemes": args.schemes, "alpha": args.alpha, "snr_db": args.snr_db,
        "frames": args.frames, "realizations": args.realizations,
        "pilot_period": args.pilot_period, "seed": args.seed,
    }
    if args.beta is not None:
        overrides["beta_tau"] = overrides["beta_nu"] = args.beta
    if args.out is not None:
        overrides["out"] = str(args.out)
    if args.no_plots:
        overrides["plots"] = False
    if args.config is not None:
        base = parse_config(args.config.read_text())
        return base.with_overrides(**overrides)
    if args.snr_db is None:
        raise ConfigError("give --config or at least --snr")
    return SimConfig(snr_db=args.snr_db).with_overrides(**overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
    except (ConfigError, OSError) as exc:
        print(f"zakotfs: error: {exc}", file=sys.stderr)
        return 2
    try:
        path = run_sweep(config, config.out, jobs=args.jobs)
        table = summarize(path, plots=config.plots)
    except OSError as exc:
        print(f"zakotfs: error: {exc}", file=sys.stderr)
        return 1
    if not table.empty:
        print(table.to_string(index=False))
    return 0


def summarize_main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="zakotfs-summarize",
                                description="Aggregate a results.csv file.")
    p.add_argument("csv", type=Path)
    p.add_argument("--out", type=Path, help="output directory (default: next to the CSV)")
    p.add_argument("--no-plots", action="store_true")
    args = p.parse_args(argv)
    try:
        table = summarize(args.csv, args.out, plots=not args.no_plots)
    except (OSError, ValueError) as exc:
        print(f"zakotfs-summarize: error: {exc}", file=sys.stderr)
        return 1
    print(table.to_string(index=False))
    return 0


if __name__ == "__main__":
    sys.exit(main())
