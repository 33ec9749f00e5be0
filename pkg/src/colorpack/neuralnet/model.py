"""The colorization network: 12 convolutions and 3 nearest-neighbor upsamplings.

Input is the normalized L plane ``(B, 1, H, W)``; output is normalized a, b
``(B, 2, H, W)``. Three stride-2 convolutions shrink the spatial size by 8 and the
three upsamplings restore it, so H and W must be multiples of 8.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .layers import (
    ACTIVATIONS,
    conv2d_backward,
    conv2d_forward,
    upsample2x_backward,
    upsample2x_forward,
)

UP = "up"

# (out_channels, stride) per conv row, UP for an upsampling row, in table order
ARCHITECTURE = [
    (64, 1), (64, 2),
    (128, 1), (128, 2),
    (256, 1), (256, 2),
    (512, 1), (256, 1), (128, 1),
    UP,
    (64, 1),
    UP,
    (32, 1), (2, 1),
    UP,
]  # fmt: skip

INPUT_CHANNELS = 1
OUTPUT_CHANNELS = 2
SPATIAL_MULTIPLE = 8


@dataclass
class ConvLayer:
    weight: np.ndarray
    bias: np.ndarray
    stride: int = 1
    activation: str = "relu"

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]


@dataclass
class Upsample:
    pass


@dataclass
class NetworkModel:
    layers: list[ConvLayer | Upsample]
    _caches: list = field(default_factory=list, repr=False, compare=False)

    @property
    def convs(self) -> list[ConvLayer]:
        return [layer for layer in self.layers if isinstance(layer, ConvLayer)]

    def parameters(self) -> list[np.ndarray]:
        params = []
        for conv in self.convs:
            params += [conv.weight, conv.bias]
        return params

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    @property
    def dtype(self) -> np.dtype:
        return self.convs[0].weight.dtype

    def astype(self, dtype) -> "NetworkModel":
        return NetworkModel(
            [
                ConvLayer(l.weight.astype(dtype), l.bias.astype(dtype), l.stride, l.activation)
                if isinstance(l, ConvLayer)
                else Upsample()
                for l in self.layers
            ]
        )

    def forward(self, x: np.ndarray, keep_cache: bool = False) -> np.ndarray:
        if x.ndim != 4 or x.shape[1] != self.convs[0].in_channels:
            raise ValueError(f"expected (B, {self.convs[0].in_channels}, H, W), got {x.shape}")
        if x.shape[2] % SPATIAL_MULTIPLE or x.shape[3] % SPATIAL_MULTIPLE:
            raise ValueError(f"spatial size {x.shape[2:]} is not a multiple of {SPATIAL_MULTIPLE}")
        x = x.astype(self.dtype, copy=False)
        caches = []
        for layer in self.layers:
            if isinstance(layer, Upsample):
                x = upsample2x_forward(x)
                caches.append(None)
                continue
            x, conv_cache = conv2d_forward(x, layer.weight, layer.bias, layer.stride)
            x, act_cache = ACTIVATIONS[layer.activation][0](x)
            if keep_cache:
                caches.append((conv_cache, act_cache))
        self._caches = caches if keep_cache else []
        return x

    def backward(self, grad: np.ndarray) -> list[np.ndarray]:
        """Gradients for :meth:`parameters`, in the same order. Needs ``forward(keep_cache=True)``."""
        if not self._caches:
            raise RuntimeError("backward called without a cached forward pass")
        grads: list[np.ndarray] = []
        first_conv = next(i for i, l in enumerate(self.layers) if isinstance(l, ConvLayer))
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            if isinstance(layer, Upsample):
                grad = upsample2x_backward(grad)
                continue
            conv_cache, act_cache = self._caches[i]
            grad = ACTIVATIONS[layer.activation][1](grad, act_cache)
            grad, gw, gb = conv2d_backward(grad, conv_cache, need_input_grad=i != first_conv)
            grads += [gb, gw]
        self._caches = []
        return grads[::-1]


def init_model(seed: int = 0, dtype=np.float32) -> NetworkModel:
    """He-uniform weights (bound sqrt(6 / fan_in)), zero biases, ReLU everywhere but a final tanh."""
    rng = np.random.default_rng(seed)
    layers: list[ConvLayer | Upsample] = []
    in_ch = INPUT_CHANNELS
    n_conv = sum(1 for row in ARCHITECTURE if row != UP)
    seen = 0
    for row in ARCHITECTURE:
        if row == UP:
            layers.append(Upsample())
            continue
        out_ch, stride = row
        seen += 1
        bound = np.sqrt(6.0 / (in_ch * 9))
        weight = rng.uniform(-bound, bound, size=(out_ch, in_ch, 3, 3)).astype(dtype)
        layers.append(
            ConvLayer(
                weight,
                np.zeros(out_ch, dtype=dtype),
                stride,
                "tanh" if seen == n_conv else "relu",
            )
        )
        in_ch = out_ch
    return NetworkModel(layers)


# --- serialization -----------------------------------------------------------

MODEL_MAGIC = b"CPKM"
MODEL_VERSION = 1
_HEADER = struct.Struct("<4sHHQ")  # magic, version, layer count, payload length
_CONV = struct.Struct("<HHBB")
_TAG_CONV = 1
_TAG_UP = 2
_ACTIVATION_CODES = {"none": 0, "relu": 1, "tanh": 2}
_ACTIVATION_NAMES = {v: k for k, v in _ACTIVATION_CODES.items()}


class ModelFormatError(ValueError):
    pass


def serialize_model(model: NetworkModel) -> bytes:
    """Little-endian model file.

    Header: magic ``CPKM``, version u16, layer count u16, payload length u64.
    Each layer record starts with a tag byte (1 conv, 2 upsample). A conv record
    follows with out u16, in u16, stride u8, activation u8, float32 weights in
    (out, in, 3, 3) row-major order, then float32 biases. A CRC32 of the
    payload closes the file.
    """
    parts = []
    for layer in model.layers:
        if isinstance(layer, Upsample):
            parts.append(bytes([_TAG_UP]))
            continue
        parts.append(bytes([_TAG_CONV]))
        parts.append(
            _CONV.pack(
                layer.out_channels,
                layer.in_channels,
                layer.stride,
                _ACTIVATION_CODES[layer.activation],
            )
        )
        parts.append(np.ascontiguousarray(layer.weight, dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f4").tobytes())
    payload = b"".join(parts)
    header = _HEADER.pack(MODEL_MAGIC, MODEL_VERSION, len(model.layers), len(payload))
    return header + payload + struct.pack("<I", zlib.crc32(payload))


def deserialize_model(data: bytes) -> NetworkModel:
    data = memoryview(bytes(data))
    if len(data) < _HEADER.size + 4:
        raise ModelFormatError("model file is truncated")
    magic, version, n_layers, payload_len = _HEADER.unpack_from(data, 0)
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"bad model magic {bytes(magic)!r}")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    if len(data) != _HEADER.size + payload_len + 4:
        raise ModelFormatError(
            f"model length mismatch: header says {payload_len} payload bytes, "
            f"file holds {len(data) - _HEADER.size - 4}"
        )
    payload = data[_HEADER.size : _HEADER.size + payload_len]
    (crc,) = struct.unpack_from("<I", data, _HEADER.size + payload_len)
    if zlib.crc32(payload) != crc:
        raise ModelFormatError("model checksum mismatch")

    layers: list[ConvLayer | Upsample] = []
    pos = 0
    try:
        for _ in range(n_layers):
            tag = payload[pos]
            pos += 1
            if tag == _TAG_UP:
                layers.append(Upsample())
                continue
            if tag != _TAG_CONV:
                raise ModelFormatError(f"unknown layer tag {tag}")
            out_ch, in_ch, stride, act = _CONV.unpack_from(payload, pos)
            pos += _CONV.size
            n_w = out_ch * in_ch * 9
            weight = np.frombuffer(payload, "<f4", n_w, pos).reshape(out_ch, in_ch, 3, 3)
            pos += 4 * n_w
            bias = np.frombuffer(payload, "<f4", out_ch, pos)
            pos += 4 * out_ch
            if act not in _ACTIVATION_NAMES:
                raise ModelFormatError(f"unknown activation code {act}")
            layers.append(
                ConvLayer(
                    weight.astype(np.float32), bias.astype(np.float32), stride, _ACTIVATION_NAMES[act]
                )
            )
    except (IndexError, struct.error, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"corrupt layer records: {exc}") from exc
    if pos != len(payload):
        raise ModelFormatError("trailing bytes after last layer")
    return NetworkModel(layers)
