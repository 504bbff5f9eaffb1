"""Command-line front end.

Exit codes: 0 success, 2 file problems, 3 invalid input, 4 numerical
failure, 64 bad usage (unknown flag, missing argument).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .br import BrConfig, breathing_roi, estimate_br
from .config import dump_defaults
from .core import (
    ReferenceRecording,
    TimeWindow,
    VitalTrace,
    format_timestamp,
    load_sequence,
    read_kv,
    read_reference_csv,
    read_table_csv,
    read_trace_csv,
    save_sequence,
    write_kv,
    write_reference_csv,
    write_trace_csv,
)
from .errors import ContainerIOError, NumericalError, ValidationError
from .evaluation import agreement, format_report, reference_rate, write_pairs_csv
from .hr import HrConfig, estimate_hr, locate_neck
from .roi import load_template
from .scene import SceneSpec, reference_signals
from .spectral import BR_BAND, HR_BAND, Band

EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- helpers -----------------------------------------------------------------

def _template(path):
    if path is None:
        from .templates import default_template
        return default_template()
    return load_template(path)


def _window(args) -> TimeWindow:
    return TimeWindow(0.0, args.window, args.increment)


def _band(args, default: Band) -> Band:
    lo = default.lo if args.band_lo is None else args.band_lo
    hi = default.hi if args.band_hi is None else args.band_hi
    return Band(lo, hi)


def _write_truth(path: Path, starts, hr, br) -> None:
    with open(path, "w") as fh:
        fh.write("window_start_s,hr_bpm,br_bpm\n")
        for s, h, b in zip(starts, hr, br):
            fh.write(f"{format_timestamp(s)},{h:.4f},{b:.4f}\n")


def _summary(name: str, trace: VitalTrace) -> str:
    mean = float(np.mean(trace.rate_bpm)) if len(trace) else float("nan")
    return f"{name}: {len(trace)} windows, mean {mean:.2f} bpm"


# --- commands ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    items = read_kv(Path(args.scene)) if args.scene else {}
    if args.seed is not None:
        items["seed"] = str(args.seed)
    spec = SceneSpec.from_kv(items)
    seq, truth = spec.render(TimeWindow(0.0, args.window, args.increment))
    out = Path(args.out)
    save_sequence(seq, out)
    write_kv(out / "scene.txt", spec.to_kv())
    _write_truth(out / "truth.csv", truth.window_starts, truth.hr_bpm, truth.br_bpm)
    if not args.no_references:
        t, bvp, bw = reference_signals(truth.motion)
        write_reference_csv(ReferenceRecording("BVP", 256.0, bvp, float(t[0])), out / "bvp.csv")
        write_reference_csv(ReferenceRecording("BW", 256.0, bw, float(t[0])), out / "bw.csv")
    print(f"simulate: {len(seq)} frames {seq.width}x{seq.height}, "
          f"{len(truth.window_starts)} windows -> {out}")
    return 0


def cmd_detect_roi(args) -> int:
    seq = load_sequence(args.container)
    cfg = replace(HrConfig(), amad_factor=args.amad_factor)
    match = locate_neck(seq, _template(args.template), cfg)
    roi = breathing_roi(seq, _template(args.template), BrConfig(amad_factor=args.amad_factor))
    r = match.rect
    items = {
        "top": r.top, "left": r.left, "height": r.height, "width": r.width,
        "scale": f"{match.scale:g}", "score": f"{match.score:.6f}",
        "breathing_top": roi.top, "breathing_left": roi.left,
        "breathing_height": roi.height, "breathing_width": roi.width,
    }
    text = "".join(f"{k}={v}\n" for k, v in items.items())
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_hr(args) -> int:
    cfg = HrConfig(window=_window(args), band=_band(args, HR_BAND), grid_step=args.grid_step,
                   lam=args.lam, direction=args.direction)
    seq = load_sequence(args.container)
    trace = estimate_hr(seq, _template(args.template), cfg)
    write_trace_csv(trace, args.out, include_selected=True)
    print(_summary("hr", trace))
    return 0


def cmd_br(args) -> int:
    cfg = BrConfig(window=_window(args), band=_band(args, BR_BAND), grid_step=args.grid_step,
                   lam=args.lam, direction=args.direction)
    seq = load_sequence(args.container)
    trace = estimate_br(seq, _template(args.template), cfg)
    write_trace_csv(trace, args.out, include_selected=False)
    print(_summary("br", trace))
    return 0


def _reference_trace(path: str, est: VitalTrace, args) -> VitalTrace:
    rows = read_table_csv(path)
    columns = set(rows[0]) if rows else set()
    if columns == {"t", "value"}:
        kind = args.kind
        band = _band(args, HR_BAND if kind == "hr" else BR_BAND)
        rec = read_reference_csv(path, "BVP" if kind == "hr" else "BW")
        wins = [TimeWindow(float(s), args.window, args.increment) for s in est.window_starts]
        return reference_rate(rec, band, wins, args.grid_step)
    column = args.column or ("rate_bpm" if "rate_bpm" in columns else f"{args.kind}_bpm")
    if "window_start_s" not in columns or column not in columns:
        raise ValidationError(f"{path}: needs columns window_start_s and {column}")
    try:
        return VitalTrace([float(r["window_start_s"]) for r in rows],
                          [float(r[column]) for r in rows])
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def cmd_evaluate(args) -> int:
    est = read_trace_csv(args.estimate)
    ref = _reference_trace(args.reference, est, args)
    conditions = None
    if args.split:
        rows = read_table_csv(args.split)
        if not rows or "condition" not in rows[0]:
            raise ValidationError(f"{args.split}: needs a condition column")
        conditions = [r["condition"] for r in rows]
    report = agreement(est, ref, conditions)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = format_report(report)
    (out / "report.txt").write_text(text)
    write_pairs_csv(est.rate_bpm, ref.rate_bpm, out / "pairs.csv", conditions, est.window_starts)
    sys.stdout.write(text)
    return 0


def cmd_config_dump(args) -> int:
    sys.stdout.write(dump_defaults())
    return 0


# --- parser ------------------------------------------------------------------

def _add_window(p, grid=True):
    p.add_argument("--window", type=float, default=30.0, help="window length in seconds")
    p.add_argument("--increment", type=float, default=1.0, help="window step in seconds")
    if grid:
        p.add_argument("--grid-step", type=float, default=0.005, help="frequency grid step in Hz")


def _add_pipeline(p, default_band: Band):
    p.add_argument("--container", required=True, help="sequence container directory")
    p.add_argument("--template", help="template container (default: packaged template)")
    p.add_argument("--out", required=True, help="output trace CSV")
    _add_window(p)
    p.add_argument("--band-lo", type=float, help=f"band lower edge in Hz (default {default_band.lo:g})")
    p.add_argument("--band-hi", type=float, help=f"band upper edge in Hz (default {default_band.hi:g})")
    p.add_argument("--lambda", dest="lam", type=float, default=16.0, help="HMM data-term weight")
    p.add_argument("--direction", choices=("bidirectional", "forward"), default="bidirectional",
                   help="HMM message passing")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nirvitals", description="Heart and breathing rate from NIR neck video.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="render a synthetic neck recording")
    p.add_argument("--scene", help="key=value scene description (default scene if omitted)")
    p.add_argument("--out", required=True, help="output container directory")
    p.add_argument("--seed", type=int, help="override the scene seed")
    p.add_argument("--no-references", action="store_true", help="skip bvp.csv and bw.csv")
    _add_window(p, grid=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect-roi", help="locate the neck in the first frame")
    p.add_argument("--container", required=True)
    p.add_argument("--template")
    p.add_argument("--out", help="write the rectangles as key=value text")
    p.add_argument("--amad-factor", type=float, default=4.0)
    p.set_defaults(func=cmd_detect_roi)

    p = sub.add_parser("hr", help="estimate heart rate per window")
    _add_pipeline(p, HR_BAND)
    p.set_defaults(func=cmd_hr)

    p = sub.add_parser("br", help="estimate breathing rate per window")
    _add_pipeline(p, BR_BAND)
    p.set_defaults(func=cmd_br)

    p = sub.add_parser("evaluate", help="agreement between estimates and references")
    p.add_argument("--estimate", required=True, help="trace CSV from hr/br")
    p.add_argument("--reference", required=True,
                   help="trace CSV, truth.csv, or a t,value reference recording")
    p.add_argument("--kind", choices=("hr", "br"), default="hr",
                   help="rate kind for recordings and truth.csv")
    p.add_argument("--column", help="reference column to compare against")
    p.add_argument("--split", help="CSV with a condition column, one row per pair")
    p.add_argument("--out", required=True, help="output directory for report.txt and pairs.csv")
    p.add_argument("--band-lo", type=float)
    p.add_argument("--band-hi", type=float)
    _add_window(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("config-dump", help="print the default constants")
    p.set_defaults(func=cmd_config_dump)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ContainerIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
