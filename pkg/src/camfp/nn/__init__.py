from .tensor import (
    Tensor,
    add,
    avg_pool2x2,
    batch_norm2d,
    conv2d,
    cross_entropy,
    global_avg_pool,
    linear,
    relu,
    softmax,
    softmax_cross_entropy,
)
from .layers import Module, Conv2d, BatchNorm2d, Linear, ResidualBlock
from .model import MiniResNet, MiniResNetConfig, save_model, load_model
from .train import TrainConfig, AdamState, adam_step, train, extract_features, extract_features_batch

__all__ = [
    "Tensor", "add", "avg_pool2x2", "batch_norm2d", "conv2d", "cross_entropy",
    "global_avg_pool", "linear", "relu", "softmax", "softmax_cross_entropy",
    "Module", "Conv2d", "BatchNorm2d", "Linear", "ResidualBlock",
    "MiniResNet", "MiniResNetConfig", "save_model", "load_model",
    "TrainConfig", "AdamState", "adam_step", "train", "extract_features",
    "extract_features_batch",
]
