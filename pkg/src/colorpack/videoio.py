"""Reading and writing videos as raw RGB24 streams or directories of P6 PPM frames."""

from __future__ import annotations

import os
import re
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .imagecore import check_rgb

RAW_SUFFIXES = {".rgb", ".raw", ".rgb24"}
_PPM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def read_ppm(path: str | os.PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    pos = 0
    fields = []
    for _ in range(4):
        m = _PPM_TOKEN.match(data, pos)
        if not m:
            raise ValueError(f"{path}: truncated PPM header")
        fields.append(m.group(1))
        pos = m.end()
    magic, w, h, maxval = fields
    if magic != b"P6":
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    if int(maxval) != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {int(maxval)}")
    width, height = int(w), int(h)
    pos += 1  # single whitespace byte before the raster
    n = width * height * 3
    if len(data) - pos < n:
        raise ValueError(f"{path}: raster is truncated")
    return np.frombuffer(data, np.uint8, n, pos).reshape(height, width, 3).copy()


def write_ppm(path: str | os.PathLike, frame: np.ndarray) -> None:
    frame = check_rgb(frame)
    h, w = frame.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(frame).tobytes())


def iter_raw_frames(path: str | os.PathLike, width: int, height: int) -> Iterator[np.ndarray]:
    frame_bytes = width * height * 3
    size = os.path.getsize(path)
    if size % frame_bytes:
        raise ValueError(
            f"{path}: {size} bytes is not a whole number of {width}x{height} RGB24 frames"
        )
    with open(path, "rb") as fh:
        while chunk := fh.read(frame_bytes):
            yield np.frombuffer(chunk, np.uint8).reshape(height, width, 3)


def read_video(
    path: str | os.PathLike, width: int | None = None, height: int | None = None
) -> list[np.ndarray]:
    """A directory is read as PPM frames in lexicographic order; a file as raw RGB24."""
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".ppm")
        if not files:
            raise ValueError(f"{path}: no .ppm frames found")
        frames = [read_ppm(p) for p in files]
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise ValueError(f"{path}: frames have differing sizes {sorted(shapes)}")
        return frames
    if not path.is_file():
        raise FileNotFoundError(f"{path}: no such file or directory")
    if not width or not height:
        raise ValueError("raw RGB24 input needs --width and --height")
    frames = list(iter_raw_frames(path, width, height))
    if not frames:
        raise ValueError(f"{path}: empty video")
    return frames


def write_video(path: str | os.PathLike, frames: Sequence[np.ndarray]) -> None:
    """Write raw RGB24 when ``path`` has a raw suffix, else a directory of PPM frames."""
    path = Path(path)
    if path.suffix.lower() in RAW_SUFFIXES:
        with open(path, "wb") as fh:
            for frame in frames:
                fh.write(np.ascontiguousarray(check_rgb(frame)).tobytes())
        return
    path.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(frames):
        write_ppm(path / f"frame_{i:06d}.ppm", frame)
