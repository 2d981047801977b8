"""Command-line front end for BER sweeps."""

from __future__ import annotations

import argparse
import math
import sys
from fractions import Fraction
from pathlib import Path

from .decoder import SCHEDULES
from .detector import STATS_MODES
from .harness import (FIGURES, ConfigError, Scenario, StopRule, emit_csv, figure_snrs,
                      parse_csv, parse_snr_range, run_sweep, snr_at_ber)
from .idd import COMPENSATION_POINTS
from .ldpc import ROOTCHECK, STANDARD
from .llrcomp import MODES as COMP_MODES

#: scenario values used when neither a flag nor a preset sets them
DEFAULTS = dict(n_tx=2, n_rx=2, n=1024, rate=Fraction(1, 2), code=ROOTCHECK, n_blocks=2,
                fast=False, schedule="bp", compensation="off", outer_iters=5, inner_iters=20)


def _rate(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad rate {text!r}; use e.g. 1/2") from None


def _fading(text: str) -> tuple[int, bool]:
    if text == "fast":
        return 0, True
    kind, _, count = text.partition(":")
    if kind != "block" or not count.isdigit() or int(count) < 1:
        raise argparse.ArgumentTypeError(f"bad fading {text!r}; use block:F or fast")
    return int(count), False


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="iddsim",
        description="Monte Carlo BER sweep of LDPC-coded MIMO iterative detection and decoding.")
    p.add_argument("--fig", type=int, choices=sorted(FIGURES),
                   help="load a reference system setup; other flags override it")
    p.add_argument("--ntx", type=int, help="transmit antennas (default 2)")
    p.add_argument("--nrx", type=int, help="receive antennas (default 2)")
    p.add_argument("--code", choices=(STANDARD, ROOTCHECK), help="code family (default rootcheck)")
    p.add_argument("--rate", type=_rate, help="code rate, 1/2 or 1/4 (default 1/2)")
    p.add_argument("--n", type=int, help="codeword length (default 1024)")
    p.add_argument("--fading", type=_fading, help="block:F or fast (default block:2)")
    p.add_argument("--schedule", choices=SCHEDULES, help="decoder schedule (default bp)")
    p.add_argument("--comp", choices=COMP_MODES, help="parity LLR compensation (default off)")
    p.add_argument("--outer", type=int, help="outer iterations (default 5)")
    p.add_argument("--inner", type=int, help="decoder iterations per activation (default 20)")
    p.add_argument("--snr", type=str, help="start:step:stop in dB, or a comma list")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    stop = p.add_mutually_exclusive_group()
    stop.add_argument("--frames", type=int, help="fixed number of frames per point")
    stop.add_argument("--target-errors", type=int, default=200,
                      help="bit errors per point before stopping (default 200)")
    p.add_argument("--max-frames", type=int, default=100_000, help="frame cap per point")
    p.add_argument("--min-frame-errors", type=int, default=0,
                   help="also require this many frame errors before stopping")
    p.add_argument("--out", type=Path, help="CSV output path (default stdout)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--stats", choices=STATS_MODES, default="best-block",
                   help="detector output statistics (default best-block)")
    p.add_argument("--comp-point", choices=COMPENSATION_POINTS, default="detector",
                   help="where compensation is applied (default detector)")
    p.add_argument("--max-log", action="store_true", help="max-log demapping")
    p.add_argument("--persist", action="store_true",
                   help="keep decoder messages across outer iterations")
    p.add_argument("--fading-index-ntx", action="store_true",
                   help="use n_tx instead of n_rx in the fading-index formula")
    p.add_argument("--code-seed", type=int, default=0, help="seed of the code construction")
    p.add_argument("--plot", action="store_true",
                   help="also render the BER curve next to the CSV (needs --out)")
    p.add_argument("--overlay", type=Path, nargs="*", default=[],
                   help="earlier CSV files drawn on the same figure")
    p.add_argument("--quiet", action="store_true", help="no progress lines on stderr")
    return p


def scenario_from_args(args) -> tuple[Scenario, list[float]]:
    values = dict(DEFAULTS)
    snr_text = args.snr
    snrs = None
    if args.fig is not None:
        preset = dict(FIGURES[args.fig])
        preset.pop("snr")
        values.update(preset)
        snrs = figure_snrs(args.fig)
    flags = dict(n_tx=args.ntx, n_rx=args.nrx, code=args.code, rate=args.rate, n=args.n,
                 schedule=args.schedule, compensation=args.comp, outer_iters=args.outer,
                 inner_iters=args.inner)
    values.update({k: v for k, v in flags.items() if v is not None})
    if args.fading is not None:
        count, fast = args.fading
        values["fast"] = fast
        if not fast:
            values["n_blocks"] = count
    if snr_text is not None:
        snrs = parse_snr_range(snr_text)
    if not snrs:
        raise ConfigError("no SNR points; pass --snr start:step:stop or --fig")
    sc = Scenario(**values, stats=args.stats, max_log=args.max_log,
                  persist_messages=args.persist, fading_index_ntx=args.fading_index_ntx,
                  code_seed=args.code_seed, compensation_point=args.comp_point)
    return sc, snrs


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sc, snrs = scenario_from_args(args)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if args.plot and args.out is None:
            raise ConfigError("--plot needs --out")
        stop = StopRule(target_errors=args.target_errors, max_frames=args.max_frames,
                        fixed_frames=args.frames, min_frame_errors=args.min_frame_errors)
    except ValueError as exc:
        print(f"iddsim: error: {exc}", file=sys.stderr)
        return 2

    def progress(rec):
        if not args.quiet:
            print(f"[{sc.label()}] {rec.snr_db:6.2f} dB  ber={rec.ber:.3e}  fer={rec.fer:.3e}  "
                  f"frames={rec.frames}  {rec.wall_time_s:.1f}s", file=sys.stderr)

    records = run_sweep(sc, snrs, stop, seed=args.seed, workers=args.workers, progress=progress)
    text = emit_csv(records)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)
    if not args.quiet:
        snr = snr_at_ber(records)
        text_snr = "not reached" if math.isnan(snr) else f"{snr:.2f} dB"
        print(f"[{sc.label()}] SNR at BER 1e-3: {text_snr}", file=sys.stderr)
    if args.plot:
        from .report import plot_ber

        curves = {path.stem: parse_csv(path.read_text()) for path in args.overlay}
        curves[sc.label()] = records
        png = plot_ber(curves, args.out.with_suffix(".png"),
                       title=f"{sc.n_tx}x{sc.n_rx}, R={sc.rate}, "
                             f"{'fast' if sc.fast else f'F={sc.n_blocks}'}")
        if not args.quiet:
            print(f"figure written to {png}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
