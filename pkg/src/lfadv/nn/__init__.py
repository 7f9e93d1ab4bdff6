from .core import (
    EVAL,
    TRAIN,
    BatchNorm,
    Dense,
    Dropout,
    Layer,
    LogSoftmax,
    Mode,
    Network,
    Param,
    ReLU,
    layer_from_spec,
)
from .gradcheck import finite_diff_check
from .losses import nll_loss
from .optim import Adam, AdamW, adam_step, adamw_step, make_optimizer

__all__ = [
    "EVAL",
    "TRAIN",
    "Adam",
    "AdamW",
    "BatchNorm",
    "Dense",
    "Dropout",
    "Layer",
    "LogSoftmax",
    "Mode",
    "Network",
    "Param",
    "ReLU",
    "adam_step",
    "adamw_step",
    "finite_diff_check",
    "layer_from_spec",
    "make_optimizer",
    "nll_loss",
]
