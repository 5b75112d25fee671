"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or processing error. Diagnostics
go to stderr; reports go to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from srbin.errors import ConfigInvalid, SrBinError
from srbin.fileio import load_image, save_image, write_atomic
from srbin.metrics import metric_suite
from srbin.protocol import (
    BRANCHES,
    REFERENCE_RESULTS,
    ExperimentConfig,
    ExperimentReport,
    load_manifest,
    run_experiment,
    scan_dataset,
)
from srbin.raster import mask_from_raster, raster_from_mask, to_grayscale
from srbin.report import FORMATS, render_metrics, render_montage, render_report
from srbin.resample import UPSCALE_KERNELS, downscale_half, upscale
from srbin.stages import SEG_METHODS, SegSpec, SrSpec, binarize
from srbin.synth import DEFAULT_STROKES, write_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="srbin", description="Super-resolution pre-processing for document binarization.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("downscale", help="halve an image with a 2x2 box filter")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("upscale", help="enlarge an image by an integer factor")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=int, default=2)
    p.add_argument("--kernel", choices=UPSCALE_KERNELS, default="bicubic")

    p = sub.add_parser("binarize", help="binarize an image (black = text)")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", choices=SEG_METHODS, required=True)
    _add_seg_params(p)
    p.add_argument("--dir", help="directory of external outputs for --method external")

    p = sub.add_parser("eval", help="score a predicted binarization against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--format", choices=FORMATS, default="json")

    p = sub.add_parser("scan", help="pair inputs with ground truths and write a manifest")
    p.add_argument("--dir", required=True)
    p.add_argument("--gt-suffix", default="_gt")
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth", help="write a synthetic document corpus with manifest.json")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    p.add_argument("--count", type=int, required=True, help="number of documents")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--strokes", type=int, default=DEFAULT_STROKES)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("experiment", help="run the with-SR / without-SR protocol")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sr", required=True, help="identity|nearest|bilinear|bicubic|lanczos3|external:DIR")
    p.add_argument("--seg", required=True, help="otsu|niblack|sauvola|external:DIR")
    _add_seg_params(p)
    p.add_argument("--branches", default="with,without")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--reference", choices=sorted(REFERENCE_RESULTS), help="compare against published values")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="render a saved experiment report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=FORMATS, default="markdown")

    p = sub.add_parser("montage", help="side-by-side panel of input, GT and both branch outputs")
    p.add_argument("--input", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--with-sr", required=True)
    p.add_argument("--without-sr", required=True)
    p.add_argument("--out", required=True)
    return parser


def _add_seg_params(p):
    p.add_argument("--window", type=int)
    p.add_argument("--k", type=float)
    p.add_argument("--r", type=float)


def parse_sr(text: str) -> SrSpec:
    if text == "identity":
        return SrSpec.identity()
    if text.startswith("external:"):
        return SrSpec.external(text.split(":", 1)[1], scale=2)
    if text in UPSCALE_KERNELS:
        return SrSpec.classical(text, 2)
    raise UsageError(f"--sr: expected identity, a kernel ({'|'.join(UPSCALE_KERNELS)}) or external:DIR, got {text!r}")


def parse_seg(text: str, window=None, k=None, r=None) -> SegSpec:
    if text.startswith("external:"):
        return SegSpec.external(text.split(":", 1)[1])
    if text == "otsu":
        return SegSpec.otsu()
    if text in ("niblack", "sauvola"):
        return SegSpec(text, window=window, k=k, r=r if text == "sauvola" else None)
    raise UsageError(f"--seg: expected otsu, niblack, sauvola or external:DIR, got {text!r}")


def parse_branches(text: str) -> tuple[str, ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        name = part if part in BRANCHES else f"{part}_sr"
        if name not in BRANCHES:
            raise UsageError(f"--branches: unknown branch {part!r}; use with, without or both")
        out.append(name)
    return tuple(out)


def _load_mask(path):
    return mask_from_raster(to_grayscale(load_image(path)))


def _cmd_downscale(args):
    save_image(downscale_half(load_image(args.input)), args.out)


def _cmd_upscale(args):
    if args.scale < 1:
        raise UsageError("--scale must be a positive integer")
    save_image(upscale(load_image(args.input), args.scale, args.kernel), args.out)


def _cmd_binarize(args):
    if args.method == "external":
        if not args.dir:
            raise UsageError("--method external needs --dir")
        spec = SegSpec.external(args.dir)
    else:
        spec = parse_seg(args.method, args.window, args.k, args.r)
    mask = binarize(load_image(args.input), spec, Path(args.input).stem)
    save_image(raster_from_mask(mask), args.out)


def _cmd_eval(args):
    report = metric_suite(_load_mask(args.pred), _load_mask(args.gt))
    sys.stdout.write(render_metrics(report, args.format))


def _cmd_scan(args):
    manifest = scan_dataset(args.dir, args.gt_suffix)
    for msg in manifest.skipped:
        print(f"skipped: {msg}", file=sys.stderr)
    write_atomic(args.out, manifest.to_json().encode())
    print(f"{len(manifest)} pairs -> {args.out}", file=sys.stderr)


def _cmd_synth(args):
    manifest = write_corpus(args.out_dir, args.seed, args.count, args.w, args.h, args.noise, args.strokes)
    print(f"{len(manifest)} documents -> {args.out_dir}", file=sys.stderr)


def _cmd_experiment(args):
    sr = parse_sr(args.sr)
    seg = parse_seg(args.seg, args.window, args.k, args.r)
    config = ExperimentConfig(
        sr=sr,
        seg=seg,
        branches=parse_branches(args.branches),
        output=args.out,
        threads=args.threads,
        reference=args.reference,
    )
    report = run_experiment(load_manifest(args.manifest), config)
    write_atomic(args.out, report.to_json().encode())
    sys.stdout.write(render_report(report, "markdown"))


def _cmd_report(args):
    report = ExperimentReport.from_json(Path(args.input).read_text())
    sys.stdout.write(render_report(report, args.format))


def _cmd_montage(args):
    image = load_image(args.input)
    panel = render_montage(image, _load_mask(args.gt), _load_mask(args.with_sr), _load_mask(args.without_sr))
    save_image(panel, args.out)


COMMANDS = {
    "downscale": _cmd_downscale,
    "upscale": _cmd_upscale,
    "binarize": _cmd_binarize,
    "eval": _cmd_eval,
    "scan": _cmd_scan,
    "synth": _cmd_synth,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
    "montage": _cmd_montage,
}


def main(argv=None) -> int:
    parser = _build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, ConfigInvalid) as exc:
        print(f"srbin {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SrBinError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"srbin {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
