"""Gradient-checked neural stack for the staging model families."""

from .layers import (Conv1D, Conv2D, Dense, Dropout, Flatten, LastStep, MaxPool1D,
                     MaxPool2D, ReLU, TimeDistributed, sigmoid, softmax)
from .lstm import LSTM
from .model import (FAMILIES, REPRESENTATIONS, SEQUENCE_FAMILIES, Model, ModelSpec,
                    build_model, conv1d_output_dim, conv2d_output_dim, cross_entropy,
                    flat_width)
from .sequences import build_sequences

__all__ = [
    "Conv1D", "Conv2D", "Dense", "Dropout", "Flatten", "LastStep", "MaxPool1D",
    "MaxPool2D", "ReLU", "TimeDistributed", "sigmoid", "softmax", "LSTM",
    "FAMILIES", "REPRESENTATIONS", "SEQUENCE_FAMILIES", "Model", "ModelSpec",
    "build_model", "conv1d_output_dim", "conv2d_output_dim", "cross_entropy",
    "flat_width", "build_sequences",
]
