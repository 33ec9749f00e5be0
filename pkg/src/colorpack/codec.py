"""Sender and receiver sides of the codec, plus bandwidth accounting.

The sender ships the lightness plane of every frame together with a network
trained on the video's keyframes; the receiver runs the network to put color back.
"""

from __future__ import annotations

import logging
import struct
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .imagecore import check_rgb, extract_grayscale, normalize_lab, rgb_to_lab
from .keyframes import DEFAULT_STEP, DistanceSeries, extract_keyframes
from .neuralnet import TrainConfig, deserialize_model, init_model, predict, serialize_model, train

log = logging.getLogger(__name__)

MIB = 1 << 20
GIB = 1 << 30
# the published bandwidth figures only reproduce at 30 frames per second
DEFAULT_FPS = Fraction(30)

PACKAGE_MAGIC = b"CPK1"
PACKAGE_VERSION = 1
_PKG_HEAD = struct.Struct("<4sHHHIHHH")  # magic, version, w, h, frames, fps num/den, keyframe count


class PackageFormatError(ValueError):
    pass


@dataclass(frozen=True)
class VideoMeta:
    width: int
    height: int
    frame_count: int
    fps: Fraction = DEFAULT_FPS

    def __post_init__(self):
        if min(self.width, self.height, self.frame_count) < 1 or self.fps <= 0:
            raise ValueError(f"video dimensions, frame count and fps must be positive: {self}")

    @property
    def raw_size(self) -> int:
        return self.width * self.height * 3 * self.frame_count

    @property
    def grayscale_size(self) -> int:
        return self.width * self.height * self.frame_count

    @classmethod
    def from_duration(
        cls, width: int, height: int, seconds: float, fps: Fraction | float = DEFAULT_FPS
    ) -> "VideoMeta":
        fps = Fraction(fps).limit_denominator(1001)
        return cls(width, height, round(seconds * fps), fps)


@dataclass(frozen=True)
class BandwidthReport:
    raw_size: int
    package_size: int
    model_size: int

    @property
    def saved(self) -> int:
        return self.raw_size - self.package_size

    @property
    def percent_saved(self) -> float:
        return 100.0 * self.saved / self.raw_size

    def as_row(self) -> dict[str, str]:
        return {
            "raw_mib": f"{self.raw_size / MIB:.2f}",
            "package_mib": f"{self.package_size / MIB:.2f}",
            "model_mib": f"{self.model_size / MIB:.2f}",
            "saved_mib": f"{self.saved / MIB:.2f}",
            "saved_gib": f"{self.saved / GIB:.2f}",
            "percent_saved": f"{self.percent_saved:.2f}",
        }


def bandwidth_stats(meta: VideoMeta, model_size: int) -> BandwidthReport:
    """Raw RGB24 size against grayscale payload plus model; container overhead is not counted."""
    if model_size < 0:
        raise ValueError("model size cannot be negative")
    return BandwidthReport(meta.raw_size, meta.grayscale_size + model_size, model_size)


@dataclass
class Package:
    meta: VideoMeta
    keyframes: list[int]
    gray: np.ndarray  # (frame_count, height, width) uint8
    model_bytes: bytes
    series: DistanceSeries | None = field(default=None, compare=False, repr=False)
    loss_history: list[float] = field(default_factory=list, compare=False, repr=False)

    def to_bytes(self) -> bytes:
        m = self.meta
        expected = (m.frame_count, m.height, m.width)
        if self.gray.shape != expected or self.gray.dtype != np.uint8:
            raise ValueError(f"grayscale payload must be uint8 {expected}, got {self.gray.shape}")
        try:
            head = _PKG_HEAD.pack(
                PACKAGE_MAGIC,
                PACKAGE_VERSION,
                m.width,
                m.height,
                m.frame_count,
                m.fps.numerator,
                m.fps.denominator,
                len(self.keyframes),
            )
        except struct.error as exc:
            raise ValueError(f"video does not fit the package header: {exc}") from exc
        body = b"".join(
            [
                head,
                struct.pack(f"<{len(self.keyframes)}I", *self.keyframes),
                struct.pack("<Q", len(self.model_bytes)),
                np.ascontiguousarray(self.gray).tobytes(),
                self.model_bytes,
            ]
        )
        return body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Package":
        data = bytes(data)
        if len(data) < _PKG_HEAD.size + 12:
            raise PackageFormatError("package is truncated")
        magic, version, w, h, n, fps_num, fps_den, n_key = _PKG_HEAD.unpack_from(data, 0)
        if magic != PACKAGE_MAGIC:
            raise PackageFormatError(f"bad package magic {magic!r}")
        if version != PACKAGE_VERSION:
            raise PackageFormatError(f"unsupported package version {version}")
        pos = _PKG_HEAD.size
        if len(data) < pos + 4 * n_key + 12:
            raise PackageFormatError("package is truncated")
        keyframes = list(struct.unpack_from(f"<{n_key}I", data, pos))
        pos += 4 * n_key
        (model_len,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        payload_len = w * h * n
        if len(data) != pos + payload_len + model_len + 4:
            raise PackageFormatError(
                f"package length {len(data)} does not match header "
                f"({payload_len} payload bytes + {model_len} model bytes)"
            )
        (crc,) = struct.unpack_from("<I", data, len(data) - 4)
        if zlib.crc32(memoryview(data)[:-4]) != crc:
            raise PackageFormatError("package checksum mismatch")
        if fps_den == 0:
            raise PackageFormatError("zero fps denominator")
        try:
            meta = VideoMeta(w, h, n, Fraction(fps_num, fps_den))
        except ValueError as exc:
            raise PackageFormatError(str(exc)) from exc
        gray = np.frombuffer(data, np.uint8, payload_len, pos).reshape(n, h, w)
        model_bytes = data[pos + payload_len : pos + payload_len + model_len]
        return cls(meta, keyframes, gray, model_bytes)

    def write(self, path) -> int:
        blob = self.to_bytes()
        with open(path, "wb") as fh:
            fh.write(blob)
        return len(blob)

    @classmethod
    def read(cls, path) -> "Package":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _check_frames(frames: Sequence[np.ndarray]) -> tuple[int, int]:
    if len(frames) == 0:
        raise ValueError("video has no frames")
    shape = check_rgb(frames[0]).shape
    for i, f in enumerate(frames):
        if check_rgb(f).shape != shape:
            raise ValueError(f"frame {i} is {f.shape[:2]}, expected {shape[:2]}")
    return shape[1], shape[0]


def encode(
    frames: Sequence[np.ndarray],
    fps: Fraction | float = DEFAULT_FPS,
    x: int = DEFAULT_STEP,
    bandwidth: float | None = None,
    config: TrainConfig | None = None,
) -> Package:
    """Extract keyframes, train a fresh network on them and package it with the L stream."""
    width, height = _check_frames(frames)
    config = config or TrainConfig()
    meta = VideoMeta(width, height, len(frames), Fraction(fps).limit_denominator(1001))

    keys, series = extract_keyframes(frames, x=x, bandwidth=bandwidth)
    log.info(
        "%d clusters at bandwidth %.1f, %d keyframes",
        series.n_clusters,
        series.bandwidth,
        len(keys.indices),
    )
    model, history = train(init_model(config.seed), [frames[i] for i in keys.indices], config)
    gray = np.stack([extract_grayscale(f) for f in frames])
    return Package(meta, keys.indices, gray, serialize_model(model), series, history)


def decode(package: Package) -> list[np.ndarray]:
    model = deserialize_model(package.model_bytes)
    m = package.meta
    return [predict(model, plane, m.width, m.height) for plane in package.gray]


@dataclass
class Metrics:
    psnr: list[float]
    ab_mse: list[float]

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.psnr))

    @property
    def mean_ab_mse(self) -> float:
        return float(np.mean(self.ab_mse))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    return float("inf") if mse == 0 else float(10 * np.log10(255.0**2 / mse))


def ab_mse(a: np.ndarray, b: np.ndarray) -> float:
    """Mean squared difference of normalized a, b over every pixel and both channels."""
    na = normalize_lab(rgb_to_lab(a))[..., 1:]
    nb = normalize_lab(rgb_to_lab(b))[..., 1:]
    return float(np.mean((na - nb) ** 2))


def evaluate(decoded: Sequence[np.ndarray], original: Sequence[np.ndarray]) -> Metrics:
    if len(decoded) != len(original):
        raise ValueError(f"frame counts differ: {len(decoded)} vs {len(original)}")
    out = Metrics([], [])
    for i, (d, o) in enumerate(zip(decoded, original)):
        if check_rgb(d).shape != check_rgb(o).shape:
            raise ValueError(f"frame {i}: size {d.shape[:2]} vs {o.shape[:2]}")
        out.psnr.append(psnr(d, o))
        out.ab_mse.append(ab_mse(d, o))
    return out
