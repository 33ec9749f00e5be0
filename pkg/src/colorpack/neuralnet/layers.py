"""Layer primitives on NCHW arrays: 3x3 convolution, 2x upsampling, activations, MSE.

Each ``*_forward`` returns ``(output, cache)`` and the matching ``*_backward``
consumes that cache. Everything runs in the dtype of the inputs, so the same
code serves float32 training and float64 gradient checks.
"""

from __future__ import annotations

import numpy as np

KERNEL = 3
PAD = 1


def conv_output_size(n: int, stride: int) -> int:
    # padding 1 on both sides: n at stride 1, ceil(n / 2) at stride 2
    return (n + 2 * PAD - KERNEL) // stride + 1


def conv2d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int = 1):
    """Same-padded 3x3 cross-correlation via im2col.

    x: (B, C, H, W); weight: (O, C, 3, 3); bias: (O,).
    """
    if x.ndim != 4:
        raise ValueError(f"expected a 4-D input, got shape {x.shape}")
    B, C, H, W = x.shape
    O = weight.shape[0]
    if weight.shape != (O, C, KERNEL, KERNEL):
        raise ValueError(f"weight shape {weight.shape} does not match {C} input channels")
    if bias.shape != (O,):
        raise ValueError(f"bias shape {bias.shape} does not match {O} output channels")
    if stride not in (1, 2):
        raise ValueError(f"stride must be 1 or 2, got {stride}")
    Ho, Wo = conv_output_size(H, stride), conv_output_size(W, stride)

    xp = np.zeros((C, B, H + 2 * PAD, W + 2 * PAD), dtype=x.dtype)
    xp[:, :, PAD:-PAD, PAD:-PAD] = x.transpose(1, 0, 2, 3)
    cols = np.empty((C, KERNEL * KERNEL, B, Ho, Wo), dtype=x.dtype)
    for i in range(KERNEL):
        for j in range(KERNEL):
            cols[:, i * KERNEL + j] = xp[
                :, :, i : i + stride * (Ho - 1) + 1 : stride, j : j + stride * (Wo - 1) + 1 : stride
            ]
    cols = cols.reshape(C * KERNEL * KERNEL, B * Ho * Wo)
    out = weight.reshape(O, -1) @ cols
    out += bias[:, None]
    out = out.reshape(O, B, Ho, Wo).transpose(1, 0, 2, 3)
    return np.ascontiguousarray(out), (cols, x.shape, weight, stride)


def conv2d_backward(grad_out: np.ndarray, cache, need_input_grad: bool = True):
    """Returns ``(grad_input, grad_weight, grad_bias)``; grad_input is None when not needed."""
    cols, (B, C, H, W), weight, stride = cache
    O = weight.shape[0]
    Ho, Wo = conv_output_size(H, stride), conv_output_size(W, stride)
    if grad_out.shape != (B, O, Ho, Wo):
        raise ValueError(f"grad_out shape {grad_out.shape} != {(B, O, Ho, Wo)}")
    go = grad_out.transpose(1, 0, 2, 3).reshape(O, -1)
    grad_w = (go @ cols.T).reshape(weight.shape)
    grad_b = go.sum(axis=1)
    if not need_input_grad:
        return None, grad_w, grad_b

    dcols = (weight.reshape(O, -1).T @ go).reshape(C, KERNEL * KERNEL, B, Ho, Wo)
    dxp = np.zeros((C, B, H + 2 * PAD, W + 2 * PAD), dtype=grad_out.dtype)
    for i in range(KERNEL):
        for j in range(KERNEL):
            dxp[
                :, :, i : i + stride * (Ho - 1) + 1 : stride, j : j + stride * (Wo - 1) + 1 : stride
            ] += dcols[:, i * KERNEL + j]
    grad_x = dxp[:, :, PAD:-PAD, PAD:-PAD].transpose(1, 0, 2, 3)
    return np.ascontiguousarray(grad_x), grad_w, grad_b


def upsample2x_forward(x: np.ndarray) -> np.ndarray:
    """Nearest-neighbor: every pixel becomes a 2x2 block."""
    return x.repeat(2, axis=2).repeat(2, axis=3)


def upsample2x_backward(grad_out: np.ndarray) -> np.ndarray:
    B, C, H, W = grad_out.shape
    return grad_out.reshape(B, C, H // 2, 2, W // 2, 2).sum(axis=(3, 5))


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(grad_out: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return grad_out * mask


def tanh_forward(x: np.ndarray):
    y = np.tanh(x)
    return y, y


def tanh_backward(grad_out: np.ndarray, y: np.ndarray) -> np.ndarray:
    return grad_out * (1 - y * y)


ACTIVATIONS = {
    "none": (lambda x: (x, None), lambda g, _: g),
    "relu": (relu_forward, relu_backward),
    "tanh": (tanh_forward, tanh_backward),
}


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean of squared differences over every element, and its gradient w.r.t. ``pred``."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(np.square(diff, dtype=np.float64)))
    return loss, (2.0 / diff.size) * diff
