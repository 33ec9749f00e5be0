"""Pixel buffers and CIELab conversion.

Frames are numpy arrays. An RGB frame is ``uint8`` with shape ``(height, width, 3)``,
channels interleaved in R, G, B order (the same layout as a raw RGB24 stream).
A Lab frame is ``float64`` with shape ``(height, width, 3)`` holding L, a, b.
"""

from __future__ import annotations

import numpy as np

# IEC 61966-2-1 primaries, D65 reference white.
RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
XYZ_TO_RGB = np.linalg.inv(RGB_TO_XYZ)
# White is taken from the matrix itself so that sRGB white lands on a = b = 0 exactly.
WHITE_XYZ = RGB_TO_XYZ.sum(axis=1)

_DELTA = 6.0 / 29.0

L_RANGE = (0.0, 100.0)
AB_RANGE = (-128.0, 127.0)


def check_rgb(frame: np.ndarray) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) RGB frame, got shape {frame.shape}")
    if frame.dtype != np.uint8:
        raise TypeError(f"RGB frames must be uint8, got {frame.dtype}")
    return frame


def srgb_decode(v: np.ndarray) -> np.ndarray:
    """Gamma-encoded sRGB in [0, 1] to linear light."""
    return np.where(v <= 0.04045, v / 12.92, ((v + 0.055) / 1.055) ** 2.4)


def srgb_encode(v: np.ndarray) -> np.ndarray:
    v = np.clip(v, 0.0, 1.0)
    return np.where(v <= 0.0031308, v * 12.92, 1.055 * v ** (1.0 / 2.4) - 0.055)


def _f(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA**3, np.cbrt(t), t / (3 * _DELTA**2) + 4.0 / 29.0)


def _finv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _DELTA, t**3, 3 * _DELTA**2 * (t - 4.0 / 29.0))


def rgb_to_lab(frame: np.ndarray) -> np.ndarray:
    frame = check_rgb(frame)
    linear = srgb_decode(frame.astype(np.float64) / 255.0)
    xyz = linear @ RGB_TO_XYZ.T / WHITE_XYZ
    fx, fy, fz = (_f(xyz[..., i]) for i in range(3))
    lab = np.empty(frame.shape, dtype=np.float64)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    # black comes out as ~1e-15 rather than 0
    lab[..., 0] = np.clip(lab[..., 0], *L_RANGE)
    return lab


def lab_to_linear(lab: np.ndarray) -> np.ndarray:
    """Lab to unclipped linear RGB; values outside [0, 1] are out of gamut."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_finv(fx), _finv(fy), _finv(fz)], axis=-1) * WHITE_XYZ
    return xyz @ XYZ_TO_RGB.T


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rgb_to_lab`. Out-of-gamut colors are clamped per channel."""
    encoded = srgb_encode(lab_to_linear(lab))
    return np.clip(np.rint(encoded * 255.0), 0, 255).astype(np.uint8)


def fit_to_gamut(lab: np.ndarray, iterations: int = 20, tol: float = 1e-6) -> np.ndarray:
    """Shrink chroma toward neutral until each pixel is representable in sRGB.

    Lightness is left untouched, unlike per-channel clamping which can shift L
    arbitrarily far for saturated predictions. A neutral color is always in gamut
    so bisection over the chroma scale in [0, 1] always has a valid lower end.
    """
    lab = np.array(lab, dtype=np.float64, copy=True)
    flat = lab.reshape(-1, 3)

    def inside(values: np.ndarray) -> np.ndarray:
        lin = lab_to_linear(values)
        return np.all((lin >= -tol) & (lin <= 1.0 + tol), axis=-1)

    bad = ~inside(flat)
    if not bad.any():
        return lab
    sub = flat[bad]
    lo = np.zeros(len(sub))
    hi = np.ones(len(sub))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        trial = sub.copy()
        trial[:, 1:] *= mid[:, None]
        ok = inside(trial)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    sub[:, 1:] *= lo[:, None]
    flat[bad] = sub
    return lab


def normalize_lab(lab: np.ndarray) -> np.ndarray:
    """Map L in [0, 100] and a, b in [-128, 127] to the network's [-1, 1] domain."""
    lab = np.asarray(lab, dtype=np.float64)
    out = np.empty_like(lab)
    out[..., 0] = lab[..., 0] / 50.0 - 1.0
    out[..., 1:] = lab[..., 1:] / 128.0
    return out


def denormalize_lab(norm: np.ndarray) -> np.ndarray:
    norm = np.asarray(norm, dtype=np.float64)
    out = np.empty_like(norm)
    out[..., 0] = np.clip((norm[..., 0] + 1.0) * 50.0, *L_RANGE)
    out[..., 1:] = np.clip(norm[..., 1:] * 128.0, *AB_RANGE)
    return out


def lightness_to_gray(lightness: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(lightness) * 2.55), 0, 255).astype(np.uint8)


def gray_to_lightness(gray: np.ndarray) -> np.ndarray:
    return np.asarray(gray, dtype=np.float64) / 2.55


def extract_grayscale(frame: np.ndarray) -> np.ndarray:
    """The L plane of ``frame`` quantized to one byte per pixel, shape ``(H, W)``."""
    return lightness_to_gray(rgb_to_lab(frame)[..., 0])


def _bilinear_axis(size_in: int, size_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # half-pixel centers, edge-clamped
    src = (np.arange(size_out) + 0.5) * (size_in / size_out) - 0.5
    src = np.clip(src, 0.0, size_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, size_in - 1)
    return i0, i1, src - i0


def resize_frame(frame: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    frame = check_rgb(frame)
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target size must be positive, got {target_w}x{target_h}")
    h, w = frame.shape[:2]
    if (h, w) == (target_h, target_w):
        return frame.copy()
    src = frame.astype(np.float64)
    y0, y1, wy = _bilinear_axis(h, target_h)
    x0, x1, wx = _bilinear_axis(w, target_w)
    rows = src[y0] * (1.0 - wy)[:, None, None] + src[y1] * wy[:, None, None]
    out = rows[:, x0] * (1.0 - wx)[None, :, None] + rows[:, x1] * wx[None, :, None]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)
