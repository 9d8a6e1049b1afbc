"""Command-line surface: init-bundle, apply, metrics, bench, dump-luts, inspect.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import struct
import sys
from pathlib import Path

import numpy as np

from . import bundle_io, metrics, pipeline
from .bundle_io import BUNDLE_MAGIC, VertexMode
from .contribution import ContributionMode, ContributionParams
from .errors import EXIT_IO, EXIT_OK, TriLutError
from .image_io import (Frame, FrameFormat, SignalConvention, format_from_path,
                       read_frame, write_frame)
from .lutcore import BRANCHES, ChannelMeans


def _contribution_from_args(args) -> ContributionParams | None:
    if args.contribution is None and args.tb is None and args.td is None \
            and args.mu is None:
        return None
    mode = ContributionMode(args.contribution or "eq3")
    kwargs = {}
    if args.tb is not None:
        kwargs["tb"] = args.tb
    if args.td is not None:
        kwargs["td"] = args.td
    if args.mu is not None:
        kwargs["mu"] = args.mu
    return ContributionParams(mode=mode, **kwargs)


def _add_ablation_flags(p: argparse.ArgumentParser):
    p.add_argument("--vertices", choices=[m.value for m in VertexMode],
                   default=None, help="vertex packing override")
    p.add_argument("--contribution",
                   choices=[m.value for m in ContributionMode], default=None,
                   help="contribution map mode override")
    p.add_argument("--tb", type=float, default=None, help="bright threshold")
    p.add_argument("--td", type=float, default=None, help="dark threshold")
    p.add_argument("--mu", type=float, default=None,
                   help="soft contribution steepness")


def _load_bundle(path: str) -> bundle_io.Bundle:
    return bundle_io.load_bundle(Path(path).read_bytes())


def _read_frame_file(path: str, fmt: str | None,
                     convention: SignalConvention) -> Frame:
    frame_format = FrameFormat(fmt) if fmt else format_from_path(path)
    return read_frame(Path(path).read_bytes(), frame_format, convention)


def _write_frame_file(frame: Frame, path: str, fmt: str | None):
    frame_format = FrameFormat(fmt) if fmt else format_from_path(path)
    Path(path).write_bytes(write_frame(frame, frame_format))
    sidecar = {"convention": frame.convention.value,
               "width": frame.width, "height": frame.height,
               "format": frame_format.value}
    Path(path + ".meta.json").write_text(json.dumps(sidecar, indent=2) + "\n")


def _cmd_init_bundle(args) -> int:
    ocio2 = bundle_io.parse_cube(Path(args.ocio2_cube).read_bytes()) \
        if args.ocio2_cube else None
    davinci = bundle_io.parse_cube(Path(args.davinci_cube).read_bytes()) \
        if args.davinci_cube else None
    bundle = bundle_io.make_bundle(
        n=args.n, init=args.init,
        vertex_mode=VertexMode(args.vertices or "eq2"),
        contribution_params=_contribution_from_args(args),
        ocio2_cube=ocio2, davinci_cube=davinci)
    Path(args.out).write_bytes(bundle_io.save_bundle(bundle))
    for note in bundle.provenance:
        print(note, file=sys.stderr)
    return EXIT_OK


def _cmd_apply(args) -> int:
    bundle = _load_bundle(args.bundle)
    frame = _read_frame_file(args.infile, args.in_format,
                             SignalConvention.SDR_GAMMA709)
    config = pipeline.PipelineConfig(
        vertex_mode=VertexMode(args.vertices) if args.vertices else None,
        contribution_params=_contribution_from_args(args),
        threads=args.threads)
    result, stats = pipeline.apply(frame, bundle, config, return_stats=True)
    _write_frame_file(result, args.outfile, args.out_format)
    if args.verbose:
        print(json.dumps({"stage_seconds": stats.stage_seconds,
                          "means": stats.means, "weights": stats.weights,
                          "clamped_input": stats.clamped_input}, indent=2),
              file=sys.stderr)
    return EXIT_OK


def _cmd_metrics(args) -> int:
    ref = _read_frame_file(args.reference, args.format,
                           SignalConvention.HDR_PQ2020)
    test = _read_frame_file(args.test, args.format, SignalConvention.HDR_PQ2020)
    rep = metrics.report(ref, test).to_dict()
    text = json.dumps(rep, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _parse_resolution(text: str) -> tuple[int, int]:
    w, _, h = text.partition("x")
    return int(w), int(h)


def _cmd_bench(args) -> int:
    bundle = _load_bundle(args.bundle)
    resolutions = [_parse_resolution(r) for r in args.resolutions.split(",")]
    curve = tuple(int(t) for t in args.thread_curve.split(",")) \
        if args.thread_curve else ()
    report = pipeline.bench(bundle, resolutions, iterations=args.iterations,
                            warmup=args.warmup, threads=args.threads,
                            thread_curve=curve)
    text = json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_dump_luts(args) -> int:
    bundle = _load_bundle(args.bundle)
    means = ChannelMeans(*(float(m) for m in args.means.split(",")))
    if args.frame:
        frame = _read_frame_file(args.frame, None, SignalConvention.SDR_GAMMA709)
        _, stats = pipeline.apply(frame, bundle, pipeline.PipelineConfig(),
                                  return_stats=True)
        weights = {b: np.array(stats.weights[b.value]) for b in BRANCHES}
        means = ChannelMeans(*stats.means)
    else:
        parts = [float(v) for v in args.weights.split(",")]
        if len(parts) == 5:
            parts = parts * 3
        if len(parts) != 15:
            raise TriLutError("expected 5 or 15 comma-separated weights")
        weights = {b: np.array(parts[i * 5:(i + 1) * 5])
                   for i, b in enumerate(BRANCHES)}
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cubes = pipeline.dump_luts(bundle, weights, means, out_n=args.size)
    for branch, payload in cubes.items():
        (out_dir / f"{branch.value}.cube").write_bytes(payload)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    data = Path(args.bundle).read_bytes()
    if data[:8] != BUNDLE_MAGIC:
        bundle_io.load_bundle(data)  # raises the precise error
    (header_len,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16:16 + header_len].decode("utf-8"))
    bundle_io.load_bundle(data)  # full validation before reporting
    summary = {
        "n": header["n"],
        "vertex_mode": header["vertex_mode"],
        "contribution": header["contribution"],
        "provenance": header.get("provenance", []),
        "tensor_count": len(header["tensors"]),
        "payload_bytes": sum(t["length"] for t in header["tensors"]),
    }
    if args.checksums:
        import hashlib
        payload = data[16 + header_len:]
        summary["checksums"] = {
            t["name"]: hashlib.sha256(
                payload[t["offset"]:t["offset"] + t["length"]]).hexdigest()
            for t in header["tensors"]
        }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trilut",
        description="SDR to HDR/WCG conversion through luma-banded 3D LUTs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-bundle", help="create a fresh bundle file")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=17, help="lattice size per axis")
    p.add_argument("--init", default="table3",
                   choices=["table3", "c100x5", "identity-ones", "identity"])
    p.add_argument("--ocio2-cube", default=None,
                   help="cube file for basis slot 1")
    p.add_argument("--davinci-cube", default=None,
                   help="cube file for basis slot 3")
    _add_ablation_flags(p)
    p.set_defaults(func=_cmd_init_bundle)

    p = sub.add_parser("apply", help="convert one SDR frame to HDR/WCG")
    p.add_argument("--bundle", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--in-format", choices=[f.value for f in FrameFormat])
    p.add_argument("--out-format", choices=[f.value for f in FrameFormat])
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    _add_ablation_flags(p)
    p.set_defaults(func=_cmd_apply)

    p = sub.add_parser("metrics", help="score a frame against a reference")
    p.add_argument("--reference", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--format", choices=[f.value for f in FrameFormat])
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("bench", help="runtime / memory report")
    p.add_argument("--bundle", required=True)
    p.add_argument("--resolutions", default="1920x1080,3840x2160")
    p.add_argument("--iterations", type=int, default=8)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--thread-curve", default="1,2,4,8")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("dump-luts", help="export merged branch LUTs as .cube")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--frame", default=None,
                   help="derive means and weights from this SDR frame")
    p.add_argument("--means", default="0.5,0.5,0.5")
    p.add_argument("--weights", default="1,0,0,0,0",
                   help="5 weights shared by all branches, or 15")
    p.add_argument("--size", type=int, default=65,
                   help="uniform lattice size of the exported cubes")
    p.set_defaults(func=_cmd_dump_luts)

    p = sub.add_parser("inspect", help="print a bundle header summary")
    p.add_argument("--bundle", required=True)
    p.add_argument("--checksums", action="store_true",
                   help="include per-tensor sha256 of the payload slices")
    p.set_defaults(func=_cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TriLutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
