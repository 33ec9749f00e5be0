from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..imagecore import (
    denormalize_lab,
    fit_to_gamut,
    gray_to_lightness,
    lab_to_rgb,
    normalize_lab,
    resize_frame,
    rgb_to_lab,
)
from .layers import mse_loss
from .model import SPATIAL_MULTIPLE, NetworkModel
from .optim import LEARNING_RATE, AdamState, adam_step

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 8
    width: int = 256
    height: int = 256
    seed: int = 0
    lr: float = LEARNING_RATE
    max_steps: int | None = None

    def __post_init__(self):
        if self.width % SPATIAL_MULTIPLE or self.height % SPATIAL_MULTIPLE:
            raise ValueError(
                f"training size {self.width}x{self.height} must be a multiple of {SPATIAL_MULTIPLE}"
            )
        if self.width < 1 or self.height < 1:
            raise ValueError("training size must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be positive")


def keyframe_tensors(
    frames: Sequence[np.ndarray], width: int, height: int, dtype=np.float32
) -> tuple[np.ndarray, np.ndarray]:
    """Resize keyframes and split them into normalized L inputs and a, b targets."""
    norm = np.stack([normalize_lab(rgb_to_lab(resize_frame(f, width, height))) for f in frames])
    norm = norm.transpose(0, 3, 1, 2).astype(dtype)
    return np.ascontiguousarray(norm[:, :1]), np.ascontiguousarray(norm[:, 1:])


def train(
    model: NetworkModel, keyframes: Sequence[np.ndarray], config: TrainConfig
) -> tuple[NetworkModel, list[float]]:
    """Fit ``model`` in place on the keyframes with MSE in normalized a, b space and Adam."""
    if len(keyframes) == 0:
        raise ValueError("no keyframes to train on")
    inputs, targets = keyframe_tensors(keyframes, config.width, config.height, model.dtype)
    rng = np.random.default_rng(config.seed)
    state = AdamState(lr=config.lr)
    params = model.parameters()
    history: list[float] = []
    n = len(inputs)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            pred = model.forward(inputs[batch], keep_cache=True)
            loss, grad = mse_loss(pred, targets[batch])
            if not np.isfinite(loss):
                raise FloatingPointError(f"loss diverged at step {len(history)}")
            adam_step(params, model.backward(grad), state)
            history.append(loss)
            if config.max_steps is not None and len(history) >= config.max_steps:
                return model, history
        if epoch % 10 == 0 or epoch == config.epochs - 1:
            log.info("epoch %d/%d loss %.5f", epoch + 1, config.epochs, history[-1])
    return model, history


def _pad_to_multiple(plane: np.ndarray, multiple: int = SPATIAL_MULTIPLE) -> np.ndarray:
    h, w = plane.shape
    ph, pw = -h % multiple, -w % multiple
    if ph == 0 and pw == 0:
        return plane
    mode = "reflect" if h > 1 and w > 1 else "edge"
    return np.pad(plane, ((0, ph), (0, pw)), mode=mode)


def predict_ab(model: NetworkModel, lightness: np.ndarray) -> np.ndarray:
    """Normalized a, b planes ``(H, W, 2)`` for a lightness plane in [0, 100]."""
    h, w = lightness.shape
    x = _pad_to_multiple(lightness / 50.0 - 1.0)
    out = model.forward(x[None, None].astype(model.dtype))
    return out[0, :, :h, :w].transpose(1, 2, 0).astype(np.float64)


def predict(model: NetworkModel, gray: np.ndarray, width: int, height: int) -> np.ndarray:
    """Colorize one transmitted grayscale plane.

    The transmitted lightness is kept as is; predicted chroma is shrunk where it
    falls outside sRGB so that the decoded pixel keeps that lightness.
    """
    gray = np.asarray(gray, dtype=np.uint8).reshape(height, width)
    lightness = gray_to_lightness(gray)
    norm = np.empty((height, width, 3))
    norm[..., 0] = lightness / 50.0 - 1.0
    norm[..., 1:] = predict_ab(model, lightness)
    lab = denormalize_lab(norm)
    lab[..., 0] = lightness
    return lab_to_rgb(fit_to_gamut(lab))
