"""Command-line interface.

Machine-readable results go to stdout as comma-separated text with a header row;
progress and summaries go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from fractions import Fraction

from . import codec
from .keyframes import DEFAULT_STEP, extract_keyframes
from .neuralnet import TrainConfig
from .videoio import read_video, write_video

log = logging.getLogger("colorpack")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _fps(text: str) -> Fraction:
    try:
        value = Fraction(text).limit_denominator(1001)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad frame rate {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"frame rate must be positive, got {text}")
    return value


def _size(text: str) -> tuple[int, int]:
    """``256`` or ``320x256`` (width x height)."""
    parts = text.lower().split("x")
    try:
        dims = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size {text!r}") from None
    if len(dims) == 1:
        dims *= 2
    if len(dims) != 2 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    if dims[0] % 8 or dims[1] % 8:
        raise argparse.ArgumentTypeError(f"training size {text} must be a multiple of 8")
    return dims[0], dims[1]


def _write_rows(rows: list[dict], out=None) -> None:
    out = out or sys.stdout
    writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def _add_video_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="raw RGB24 file or directory of PPM frames")
    p.add_argument("--width", type=_positive_int, help="frame width for raw input")
    p.add_argument("--height", type=_positive_int, help="frame height for raw input")


def _add_keyframe_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x-step", type=_positive_int, default=DEFAULT_STEP)
    p.add_argument("--bandwidth", type=_positive_float, help="mean shift bandwidth (default: auto)")


def cmd_keyframes(args) -> None:
    frames = read_video(args.input, args.width, args.height)
    keys, series = extract_keyframes(frames, x=args.x_step, bandwidth=args.bandwidth)
    log.info(
        "%d frames, %d clusters (bandwidth %.2f), %d keyframes",
        len(frames),
        series.n_clusters,
        series.bandwidth,
        len(keys.indices),
    )
    print("index")
    for i in keys.indices:
        print(i)
    if args.table:
        with open(args.table, "w", newline="") as fh:
            _write_rows(
                [
                    {"frame": i, "distance": f"{d:.4f}", "cluster": int(c)}
                    for i, (d, c) in enumerate(zip(series.distances, series.labels))
                ],
                fh,
            )


def cmd_encode(args) -> None:
    frames = read_video(args.input, args.width, args.height)
    width, height = args.train_size
    config = TrainConfig(
        epochs=args.epochs, batch_size=args.batch, width=width, height=height, seed=args.seed
    )
    package = codec.encode(
        frames, fps=args.fps, x=args.x_step, bandwidth=args.bandwidth, config=config
    )
    file_size = package.write(args.output)
    report = codec.bandwidth_stats(package.meta, len(package.model_bytes))
    log.info(
        "wrote %s: %d keyframes, model %d bytes, final loss %.5f",
        args.output,
        len(package.keyframes),
        len(package.model_bytes),
        package.loss_history[-1],
    )
    _write_rows([{**report.as_row(), "file_bytes": file_size}])


def cmd_decode(args) -> None:
    package = codec.Package.read(args.input)
    frames = codec.decode(package)
    write_video(args.output, frames)
    log.info("decoded %d frames to %s", len(frames), args.output)


def cmd_stats(args) -> None:
    meta = codec.VideoMeta.from_duration(args.width, args.height, args.duration, args.fps)
    report = codec.bandwidth_stats(meta, round(args.model_size * codec.MIB))
    _write_rows([{"width": meta.width, "height": meta.height, "frames": meta.frame_count,
                  **report.as_row()}])  # fmt: skip


def cmd_eval(args) -> None:
    decoded = read_video(args.input, args.width, args.height)
    original = read_video(args.reference, args.width, args.height)
    metrics = codec.evaluate(decoded, original)
    rows = [
        {"frame": str(i), "psnr": f"{p:.4f}", "ab_mse": f"{m:.6f}"}
        for i, (p, m) in enumerate(zip(metrics.psnr, metrics.ab_mse))
    ]
    rows.append(
        {"frame": "mean", "psnr": f"{metrics.mean_psnr:.4f}", "ab_mse": f"{metrics.mean_ab_mse:.6f}"}
    )
    _write_rows(rows)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colorpack",
        description="Ship raw video as grayscale plus a colorization network trained on keyframes.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keyframes", help="list keyframe indices")
    _add_video_input(p)
    _add_keyframe_flags(p)
    p.add_argument("--table", help="write a frame,distance,cluster CSV here")
    p.set_defaults(func=cmd_keyframes)

    p = sub.add_parser("encode", help="build a package from a color video")
    _add_video_input(p)
    _add_keyframe_flags(p)
    p.add_argument("--output", required=True)
    p.add_argument("--fps", type=_fps, default=codec.DEFAULT_FPS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=_positive_int, default=200)
    p.add_argument("--batch", type=_positive_int, default=8)
    p.add_argument("--train-size", type=_size, default=(256, 256), help="N or WxH, multiple of 8")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="colorize a package back to RGB")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="*.rgb for raw RGB24, else a PPM directory")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("stats", help="bandwidth arithmetic without encoding")
    p.add_argument("--width", type=_positive_int, required=True)
    p.add_argument("--height", type=_positive_int, required=True)
    p.add_argument("--duration", type=_positive_float, required=True, help="seconds")
    p.add_argument("--fps", type=_fps, default=codec.DEFAULT_FPS)
    p.add_argument("--model-size", type=float, required=True, help="MiB")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="PSNR and a,b error of a decoded video")
    _add_video_input(p)
    p.add_argument("--reference", required=True, help="original video")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command in ("keyframes", "encode", "decode"):
        log.setLevel(logging.INFO)
    try:
        args.func(args)
    except (ValueError, OSError, codec.PackageFormatError) as exc:
        print(f"colorpack {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
