"""Model family construction: LR, MLP, CNN1D, CNN2D, LSTM, RCNN.

A Model is an ordered layer stack ending in a 5-way softmax over the
sleep stages. Families and representations pair up as: CNN2D and RCNN
require the spectrogram grid, CNN1D the channel-averaged raw waveform,
and LR/MLP/LSTM accept any representation flattened per epoch.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from ..errors import DataError, ParameterError, ShapeError
from ..hypnogram import N_STAGES
from .layers import (Conv1D, Conv2D, Dense, Dropout, Flatten, LastStep, MaxPool1D,
                     MaxPool2D, ReLU, TimeDistributed, softmax)
from .lstm import LSTM

FAMILIES = ("LR", "MLP", "CNN1D", "CNN2D", "LSTM", "RCNN")
REPRESENTATIONS = ("expert", "spectrogram", "raw")
SEQUENCE_FAMILIES = ("LSTM", "RCNN")
SPECTROGRAM_SHAPE = (29, 257)
RAW_SHAPE = (6000, 6)

_REP_ALLOWED = {
    "LR": REPRESENTATIONS,
    "MLP": REPRESENTATIONS,
    "LSTM": REPRESENTATIONS,
    "CNN2D": ("spectrogram",),
    "CNN1D": ("raw",),
    "RCNN": ("spectrogram",),
}


@dataclass
class ModelSpec:
    family: str
    representation: str = "expert"
    lookback: int = 1
    hidden_size: int = 64
    n_layers: int = 2
    dropout_keep: float = 1.0
    conv_filters: tuple = (8, 16, 32)
    filter_size: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown model family {self.family!r}")
        if self.representation not in REPRESENTATIONS:
            raise ParameterError(f"unknown representation {self.representation!r}")
        if self.representation not in _REP_ALLOWED[self.family]:
            raise ParameterError(
                f"{self.family} cannot consume the {self.representation} representation")
        if self.lookback < 1:
            raise ParameterError(f"lookback must be >= 1, got {self.lookback}")
        if self.hidden_size < 1 or self.n_layers < 1:
            raise ParameterError("hidden_size and n_layers must be >= 1")
        if not 0 < self.dropout_keep <= 1:
            raise ParameterError(f"dropout keep must be in (0, 1], got {self.dropout_keep}")
        if self.filter_size not in (3, 5, 7):
            raise ParameterError(f"filter size must be one of 3, 5, 7, got {self.filter_size}")
        self.conv_filters = tuple(int(f) for f in self.conv_filters)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["conv_filters"] = list(self.conv_filters)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        d["conv_filters"] = tuple(d.get("conv_filters", (8, 16, 32)))
        return cls(**d)


def flat_width(representation: str) -> int:
    """Per-epoch feature width when a representation is flattened to a vector."""
    if representation == "expert":
        return 96
    if representation == "spectrogram":
        return SPECTROGRAM_SHAPE[0] * SPECTROGRAM_SHAPE[1]
    return RAW_SHAPE[0] * RAW_SHAPE[1]


def conv2d_output_dim(input_hw: tuple, filters: tuple) -> int:
    """Flattened width after the conv/pool stack: same-padded conv keeps H x W,
    each 2x2 pool floor-halves both extents."""
    h, w = input_hw
    for _ in filters:
        h, w = h // 2, w // 2
    return filters[-1] * h * w


def conv1d_output_dim(length: int, filters: tuple) -> int:
    n = length
    for _ in filters:
        n //= 2
    return filters[-1] * n


class Model:
    """Layer stack ending in softmax stage probabilities."""

    def __init__(self, spec: ModelSpec, layers: list):
        self.spec = spec
        self.layers = layers

    def forward(self, x: np.ndarray, train: bool = False, rng=None) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        for i, layer in enumerate(self.layers):
            try:
                x = layer.forward(x, train=train, rng=rng)
            except ValueError as e:
                raise ShapeError(f"layer {i} ({type(layer).__name__}): {e}") from e
        return softmax(x)

    def backward(self, probs: np.ndarray, labels: np.ndarray,
                 weights: np.ndarray | None = None) -> None:
        """Accumulate gradients of the mean cross-entropy at the last forward pass."""
        grad = _dlogits(probs, labels, weights)
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def zero_grads(self):
        for layer in self.layers:
            layer.zero_grads()

    def named_params(self) -> list[tuple[str, np.ndarray, np.ndarray]]:
        """(name, param, grad) triples in a stable declared order."""
        out = []
        for i, layer in enumerate(self.layers):
            if isinstance(layer, TimeDistributed):
                out.extend(layer.named_params(str(i)))
            else:
                for name in layer.params:
                    out.append((f"{i}.{name}", layer.params[name], layer.grads[name]))
        return out

    def param_vector(self) -> np.ndarray:
        parts = [p.ravel() for _, p, _ in self.named_params()]
        return np.concatenate(parts) if parts else np.empty(0)

    def set_param_vector(self, v: np.ndarray) -> None:
        i = 0
        for _, p, _ in self.named_params():
            p.ravel()[:] = v[i:i + p.size]
            i += p.size
        if i != v.size:
            raise ShapeError(f"parameter vector length {v.size}, model needs {i}")

    def grad_vector(self) -> np.ndarray:
        parts = [g.ravel() for _, _, g in self.named_params()]
        return np.concatenate(parts) if parts else np.empty(0)

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: p for name, p, _ in self.named_params()}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        for name, p, _ in self.named_params():
            if name not in arrays:
                raise DataError(f"model store is missing parameter {name}")
            if arrays[name].shape != p.shape:
                raise ShapeError(f"parameter {name}: stored shape {arrays[name].shape}, "
                                 f"model needs {p.shape}")
            p[...] = arrays[name]


def _conv_stack_2d(spec: ModelSpec, rng) -> list:
    layers = []
    c_in = 1
    for f in spec.conv_filters:
        layers += [Conv2D(c_in, f, spec.filter_size, rng), ReLU(), MaxPool2D()]
        c_in = f
    return layers


def _conv_stack_1d(spec: ModelSpec, rng) -> list:
    layers = []
    c_in = 1
    for f in spec.conv_filters:
        layers += [Conv1D(c_in, f, spec.filter_size, rng), ReLU(), MaxPool1D()]
        c_in = f
    return layers


def build_model(spec: ModelSpec, input_shape: tuple | None = None) -> Model:
    """Construct the layer stack for a spec.

    ``input_shape`` overrides the representation's canonical per-epoch
    shape (the 29x257 grid, 6000-sample waveform, or flat width); used to
    build small configurations for gradient verification.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    fam = spec.family
    if fam == "LR":
        d = input_shape[0] if input_shape else flat_width(spec.representation)
        layers = [Dense(d, N_STAGES, rng)]
    elif fam == "MLP":
        d = input_shape[0] if input_shape else flat_width(spec.representation)
        layers = [Dense(d, spec.hidden_size, rng), ReLU()]
        if spec.dropout_keep < 1:
            layers.append(Dropout(spec.dropout_keep))
        layers.append(Dense(spec.hidden_size, N_STAGES, rng))
    elif fam == "CNN2D":
        hw = input_shape or SPECTROGRAM_SHAPE
        layers = _conv_stack_2d(spec, rng) + [
            Flatten(),
            Dense(conv2d_output_dim(hw, spec.conv_filters), N_STAGES, rng),
        ]
    elif fam == "CNN1D":
        length = input_shape[0] if input_shape else RAW_SHAPE[0]
        layers = _conv_stack_1d(spec, rng) + [
            Flatten(),
            Dense(conv1d_output_dim(length, spec.conv_filters), N_STAGES, rng),
        ]
    elif fam == "LSTM":
        d = input_shape[0] if input_shape else flat_width(spec.representation)
        layers = []
        for i in range(spec.n_layers):
            layers.append(LSTM(d if i == 0 else spec.hidden_size, spec.hidden_size, rng))
            if spec.dropout_keep < 1:
                layers.append(Dropout(spec.dropout_keep))
        layers += [LastStep(), Dense(spec.hidden_size, N_STAGES, rng)]
    elif fam == "RCNN":
        hw = input_shape or SPECTROGRAM_SHAPE
        conv_dim = conv2d_output_dim(hw, spec.conv_filters)
        layers = [TimeDistributed(_conv_stack_2d(spec, rng) + [Flatten()])]
        for i in range(spec.n_layers):
            layers.append(LSTM(conv_dim if i == 0 else spec.hidden_size, spec.hidden_size, rng))
            if spec.dropout_keep < 1:
                layers.append(Dropout(spec.dropout_keep))
        layers += [LastStep(), Dense(spec.hidden_size, N_STAGES, rng)]
    else:  # pragma: no cover - guarded in ModelSpec
        raise ParameterError(f"unknown family {fam}")
    return Model(spec, layers)


def cross_entropy(probs: np.ndarray, labels: np.ndarray,
                  weights: np.ndarray | None = None) -> float:
    """Mean -log p[label], probabilities clamped at 1e-12.

    ``weights`` are optional per-class weights; the result is then the
    weighted mean with weights looked up by label.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if labels.min(initial=0) < 0 or labels.max(initial=0) >= N_STAGES:
        raise DataError(f"stage label out of range 0..4: {labels.min()}..{labels.max()}")
    p = np.clip(probs[np.arange(len(labels)), labels], 1e-12, None)
    nll = -np.log(p)
    if weights is None:
        return float(nll.mean())
    w = np.asarray(weights, dtype=np.float64)[labels]
    return float((w * nll).sum() / w.sum())


def _dlogits(probs: np.ndarray, labels: np.ndarray,
             weights: np.ndarray | None = None) -> np.ndarray:
    b = probs.shape[0]
    onehot = np.zeros_like(probs)
    onehot[np.arange(b), labels] = 1.0
    if weights is None:
        return (probs - onehot) / b
    w = np.asarray(weights, dtype=np.float64)[labels]
    return (probs - onehot) * (w / w.sum())[:, None]
