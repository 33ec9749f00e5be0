from .layers import (
    conv2d_backward,
    conv2d_forward,
    mse_loss,
    relu_backward,
    relu_forward,
    tanh_backward,
    tanh_forward,
    upsample2x_backward,
    upsample2x_forward,
)
from .model import (
    ARCHITECTURE,
    ConvLayer,
    ModelFormatError,
    NetworkModel,
    Upsample,
    deserialize_model,
    init_model,
    serialize_model,
)
from .optim import AdamState, adam_step
from .train import TrainConfig, predict, predict_ab, train

__all__ = [
    "ARCHITECTURE",
    "AdamState",
    "ConvLayer",
    "ModelFormatError",
    "NetworkModel",
    "TrainConfig",
    "Upsample",
    "adam_step",
    "conv2d_backward",
    "conv2d_forward",
    "deserialize_model",
    "init_model",
    "mse_loss",
    "predict",
    "predict_ab",
    "relu_backward",
    "relu_forward",
    "serialize_model",
    "tanh_backward",
    "tanh_forward",
    "train",
    "upsample2x_backward",
    "upsample2x_forward",
]
