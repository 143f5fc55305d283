"""Command line front end: encode, decode, psnr, bdrate, sweep."""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .codec import (
    CodecConfig,
    StreamError,
    decode_sequence,
    encode_sequence,
    read_header,
)
from .frameio import Y4MError, read_y4m, write_y4m
from .metrics import LOSSLESS, RDCurve, RDPoint, bd_metrics, psnr, read_rd_csv, write_rd_csv

SCENARIOS = (
    ("refine_off_deblock_off", False, False),
    ("refine_on_deblock_off", True, False),
    ("refine_off_deblock_on", False, True),
    ("refine_on_deblock_on", True, True),
)

STATS_COLUMNS = (
    "frame", "frame_type", "bits", "psnr_db",
    "skip", "inter16", "inter8", "intra", "refine_flags", "refine_us_per_mb",
)


class SweepError(RuntimeError):
    pass


def _onoff(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected on|off, got {value!r}")
    return value == "on"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stpc",
        description="Hybrid video codec with deblocking-based spatial refinement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode a Y4M clip")
    enc.add_argument("--input", required=True, help="input .y4m file")
    enc.add_argument("--output", required=True, help="output bitstream file")
    enc.add_argument("--qp", required=True, type=int, help="quantization parameter 0..51")
    enc.add_argument("--refine", type=_onoff, default=False, metavar="on|off",
                     help="spatial refinement of inter prediction (default off)")
    enc.add_argument("--h", dest="strength", type=int, default=28,
                     help="refinement filter strength 0..51 (default 28)")
    enc.add_argument("--deblock", type=_onoff, default=False, metavar="on|off",
                     help="in-loop deblocking of reference frames (default off)")
    enc.add_argument("--grid", type=int, choices=(4, 8), default=4,
                     help="boundary grid step (default 4)")
    enc.add_argument("--range", dest="search_range", type=int, default=16,
                     help="motion search range (default 16)")
    enc.add_argument("--gop", type=int, default=0,
                     help="intra-frame interval, 0 = first frame only")
    enc.add_argument("--stats", help="write per-frame statistics CSV here")
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", help="decode a bitstream")
    dec.add_argument("--input", required=True, help="input bitstream file")
    dec.add_argument("--output", help="output .y4m file (omit to inspect the header only)")
    dec.set_defaults(func=cmd_decode)

    ps = sub.add_parser("psnr", help="luma PSNR between two Y4M clips")
    ps.add_argument("reference", help="reference .y4m")
    ps.add_argument("distorted", help=".y4m under test")
    ps.set_defaults(func=cmd_psnr)

    bd = sub.add_parser("bdrate", help="average rate/PSNR deltas of two RD curves")
    bd.add_argument("anchor", help="anchor curve CSV (rate_bps,psnr_db)")
    bd.add_argument("test", help="test curve CSV")
    bd.set_defaults(func=cmd_bdrate)

    sw = sub.add_parser("sweep", help="QP x scenario sweep producing RD and BD CSV data")
    sw.add_argument("--input", required=True, help="input .y4m file")
    sw.add_argument("--qps", required=True,
                    help="comma-separated QP list, e.g. 24,28,32,36")
    sw.add_argument("--output-dir", required=True, help="directory for CSV outputs")
    sw.add_argument("--h", dest="strength", type=int, default=28)
    sw.add_argument("--grid", type=int, choices=(4, 8), default=4)
    sw.add_argument("--range", dest="search_range", type=int, default=16)
    sw.add_argument("--gop", type=int, default=0)
    sw.set_defaults(func=cmd_sweep)
    return parser


def _check_qp(parser_error, qp: int, what: str = "--qp") -> None:
    if not 0 <= qp <= 51:
        parser_error(f"{what} must be in [0, 51], got {qp}")


def _rate_bps(total_bits: int, sequence) -> float:
    num, den = sequence.frame_rate
    return total_bits * (num / den) / len(sequence)


def _format_psnr(value: float) -> str:
    return "lossless" if value == LOSSLESS else f"{value:.4f}"


def cmd_encode(args) -> int:
    seq = read_y4m(Path(args.input).read_bytes())
    cfg = CodecConfig(
        qp=args.qp, refine_enabled=args.refine, refine_h=args.strength,
        inloop_deblock=args.deblock, grid_step=args.grid,
        search_range=args.search_range, gop=args.gop,
    )
    result = encode_sequence(seq, cfg)
    Path(args.output).write_bytes(result.bitstream)
    if args.stats:
        with open(args.stats, "w", newline="") as fp:
            _write_stats_csv(fp, result.stats)
    bits = len(result.bitstream) * 8
    print(f"encoded {len(seq)} frames {seq.width}x{seq.height} qp={args.qp} "
          f"refine={'on' if args.refine else 'off'} deblock={'on' if args.deblock else 'off'}")
    print(f"  bits={bits} rate_bps={_rate_bps(bits, seq):.1f} "
          f"psnr_db={_format_psnr(psnr(result.recon, seq))}")
    us = result.stats.refine_us_per_mb
    if us is not None:
        print(f"  refine_us_per_mb={us:.2f}")
    return 0


def _write_stats_csv(fp, stats) -> None:
    w = csv.writer(fp, lineterminator="\n")
    w.writerow(STATS_COLUMNS)
    for f in stats.frames:
        us = "" if f.refine_calls == 0 else f"{f.refine_seconds / f.refine_calls * 1e6:.2f}"
        w.writerow([
            f.index, f.frame_type, f.bits, _format_psnr(f.psnr_db),
            f.mode_counts["skip"], f.mode_counts["inter16"],
            f.mode_counts["inter8"], f.mode_counts["intra"],
            f.refine_flags, us,
        ])


def cmd_decode(args) -> int:
    data = Path(args.input).read_bytes()
    header = read_header(data)
    print(f"stream: {header.width}x{header.height} frames={header.frame_count} "
          f"qp={header.qp} refine={'on' if header.refine_enabled else 'off'} "
          f"h={header.refine_h} deblock={'on' if header.inloop_deblock else 'off'} "
          f"grid={header.grid_step} fps={header.fps[0]}:{header.fps[1]}")
    if args.output is None:
        return 0
    seq = decode_sequence(data)
    Path(args.output).write_bytes(write_y4m(seq))
    print(f"decoded {len(seq)} frames -> {args.output}")
    return 0


def cmd_psnr(args) -> int:
    ref = read_y4m(Path(args.reference).read_bytes())
    dist = read_y4m(Path(args.distorted).read_bytes())
    print(f"psnr_db: {_format_psnr(psnr(ref, dist))}")
    return 0


def cmd_bdrate(args) -> int:
    with open(args.anchor) as fp:
        anchor = read_rd_csv(fp)
    with open(args.test) as fp:
        test = read_rd_csv(fp)
    bd_rate, bd_psnr = bd_metrics(anchor, test)
    print(f"bd_rate_percent: {bd_rate:.4f}")
    print(f"bd_psnr_db: {bd_psnr:.4f}")
    return 0


def cmd_sweep(args) -> int:
    qps = [int(v) for v in args.qps.split(",") if v.strip() != ""]
    if not qps:
        raise SweepError("empty QP list")
    for qp in qps:
        if not 0 <= qp <= 51:
            raise SweepError(f"qp {qp} outside [0, 51]")
    seq = read_y4m(Path(args.input).read_bytes())
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    curves = {}
    timing_rows = []
    cell_rows = []
    for name, refine, deblock in SCENARIOS:
        points = []
        for qp in qps:
            try:
                cfg = CodecConfig(
                    qp=qp, refine_enabled=refine, refine_h=args.strength,
                    inloop_deblock=deblock, grid_step=args.grid,
                    search_range=args.search_range, gop=args.gop,
                )
                result = encode_sequence(seq, cfg)
                decoded = decode_sequence(result.bitstream)
                for got, want in zip(decoded.frames, result.recon.frames):
                    if not (got.luma.data == want.luma.data).all():
                        raise StreamError("decoder output differs from encoder reconstruction")
            except Exception as exc:
                raise SweepError(f"cell scenario={name} qp={qp} failed: {exc}") from exc
            bits = len(result.bitstream) * 8
            rate = _rate_bps(bits, seq)
            quality = psnr(decoded, seq)
            points.append(RDPoint(rate, quality))
            cell_rows.append([name, qp, len(seq), bits, repr(rate), repr(quality)])
            us = result.stats.refine_us_per_mb
            timing_rows.append([name, qp, result.stats.refine_calls,
                                "" if us is None else f"{us:.2f}"])
            print(f"{name} qp={qp}: bits={bits} rate_bps={rate:.1f} "
                  f"psnr_db={_format_psnr(quality)}")
        try:
            curves[name] = RDCurve(points)
        except ValueError as exc:
            raise SweepError(f"scenario {name}: {exc}") from exc
        with open(outdir / f"rd_{name}.csv", "w", newline="") as fp:
            write_rd_csv(curves[name], fp)

    with open(outdir / "cells.csv", "w", newline="") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["scenario", "qp", "frames", "total_bits", "rate_bps", "psnr_db"])
        w.writerows(cell_rows)
    with open(outdir / "refine_timing.csv", "w", newline="") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["scenario", "qp", "refine_calls", "refine_us_per_mb"])
        w.writerows(timing_rows)

    with open(outdir / "bd_summary.csv", "w", newline="") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["scenario", "bd_rate_percent", "bd_psnr_db", "mean_refine_us_per_mb"])
        for deblock_name, anchor_key, test_key in (
            ("deblock_off", "refine_off_deblock_off", "refine_on_deblock_off"),
            ("deblock_on", "refine_off_deblock_on", "refine_on_deblock_on"),
        ):
            bd_rate, bd_psnr = bd_metrics(curves[anchor_key], curves[test_key])
            cell_us = [float(r[3]) for r in timing_rows if r[0] == test_key and r[3] != ""]
            mean_us = f"{sum(cell_us) / len(cell_us):.2f}" if cell_us else ""
            w.writerow([deblock_name, f"{bd_rate:.4f}", f"{bd_psnr:.4f}", mean_us])
    print(f"wrote {len(SCENARIOS)} curve CSVs, cells.csv, refine_timing.csv and "
          f"bd_summary.csv to {outdir}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "qp", None) is not None:
        _check_qp(parser.error, args.qp)
    if getattr(args, "strength", None) is not None:
        _check_qp(parser.error, args.strength, "--h")
    try:
        return args.func(args)
    except (StreamError, Y4MError, SweepError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
