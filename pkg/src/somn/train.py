"""Training: recording-level splits, mini-batch SGD, random hyperparameter
search, and the versioned model store.

Splits are always by recording id, never by epoch, so no recording leaks
across train/validation/test. Optimization is SGD with momentum 0.9 and
early stopping on validation cross-entropy; the best-validation
parameters are the ones returned.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import (ChecksumError, DataError, FormatVersionError, ParameterError,
                     TrainingError)
from .hypnogram import Hypnogram
from .metrics import confusion, kappa as kappa_of
from .nn import (Model, ModelSpec, SEQUENCE_FAMILIES, build_model, build_sequences,
                 cross_entropy)
from .spectral import DEFAULT_K, DEFAULT_NW, FFT_N
from .synth import PRNG_ALGORITHM


@dataclass(frozen=True)
class SplitPlan:
    train_ids: tuple
    val_ids: tuple
    test_ids: tuple
    seed: int

    def __post_init__(self):
        sets = [set(self.train_ids), set(self.val_ids), set(self.test_ids)]
        total = sum(len(s) for s in sets)
        if len(sets[0] | sets[1] | sets[2]) != total:
            raise DataError("split sets are not pairwise disjoint")


def make_split(ids, fractions=(0.7, 0.1, 0.2), seed: int = 0) -> SplitPlan:
    """Deterministic recording-level split; fractional remainders go to train."""
    ids = list(ids)
    if not ids:
        raise DataError("cannot split an empty id list")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ParameterError(f"split fractions sum to {sum(fractions)}, expected 1")
    n = len(ids)
    n_val = int(np.floor(fractions[1] * n))
    n_test = int(np.floor(fractions[2] * n))
    n_train = n - n_val - n_test
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    shuffled = [ids[i] for i in order]
    return SplitPlan(
        train_ids=tuple(shuffled[:n_train]),
        val_ids=tuple(shuffled[n_train:n_train + n_val]),
        test_ids=tuple(shuffled[n_train + n_val:]),
        seed=seed,
    )


def prepare_inputs(spec: ModelSpec, per_epoch: np.ndarray) -> np.ndarray:
    """Shape one recording's per-epoch representation for a model family.

    per_epoch: (n, 96) expert features, (n, 29, 257) spectrograms, or
    (n, 6000, 6) raw epochs. Sequence families get lookback windows that
    never cross the recording boundary.
    """
    x = np.asarray(per_epoch, dtype=np.float64)
    fam = spec.family
    if fam == "CNN2D":
        x = x[:, None, :, :]
    elif fam == "CNN1D":
        x = x.mean(axis=2)[:, None, :]  # six channels averaged to one waveform
    elif fam == "RCNN":
        x = x[:, None, :, :]
    else:  # LR, MLP, LSTM: flatten per epoch
        x = x.reshape(x.shape[0], -1)
    if fam in SEQUENCE_FAMILIES:
        x = build_sequences(x, spec.lookback)
    return x


def assemble_dataset(spec: ModelSpec, recordings: list) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate (per_epoch_values, labels) pairs into one model-ready dataset."""
    xs, ys = [], []
    for per_epoch, labels in recordings:
        xs.append(prepare_inputs(spec, per_epoch))
        ys.append(np.asarray(labels, dtype=np.int64))
    return np.concatenate(xs), np.concatenate(ys)


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 64
    max_epochs: int = 30
    patience: int = 5
    seed: int = 0
    class_weights: np.ndarray | None = None
    nan_check: bool = True


@dataclass
class TrainedModel:
    spec: ModelSpec
    params: dict                      # name -> float64 array, declared order
    norm_stats: tuple | None          # (mean, std) per feature column
    provenance: dict
    train_seed: int
    val_metrics: dict
    format_version: int = 1
    input_shape: tuple | None = None

    def model(self) -> Model:
        m = build_model(self.spec, input_shape=self.input_shape)
        m.load_state(self.params)
        return m


def default_provenance() -> dict:
    return {
        "taper_nw": DEFAULT_NW,
        "taper_k": DEFAULT_K,
        "fft_length": FFT_N,
        "prng": PRNG_ALGORITHM,
        "package_version": __version__,
        "optimizer": "sgd-momentum-0.9",
        "kurtosis_convention": "pearson-m4/m2^2-population",
        "percentile_convention": "linear-interpolation-closest-ranks",
    }


def _eval_loss(model: Model, x: np.ndarray, y: np.ndarray, batch: int = 256) -> float:
    total, n = 0.0, len(y)
    for i in range(0, n, batch):
        probs = model.forward(x[i:i + batch])
        p = np.clip(probs[np.arange(len(y[i:i + batch])), y[i:i + batch]], 1e-12, None)
        total += float(-np.log(p).sum())
    return total / n


def predict_probs(model: Model, x: np.ndarray, batch: int = 256) -> np.ndarray:
    out = []
    for i in range(0, len(x), batch):
        out.append(model.forward(x[i:i + batch]))
    return np.concatenate(out)


def _val_metrics(model: Model, x: np.ndarray, y: np.ndarray) -> dict:
    probs = predict_probs(model, x)
    pred = probs.argmax(axis=1)
    cm = confusion(Hypnogram(y), Hypnogram(pred))
    k = kappa_of(cm)
    return {
        "loss": _eval_loss(model, x, y),
        "accuracy": float((pred == y).mean()),
        "kappa": k.kappa,
    }


def fit(spec: ModelSpec, train_data: tuple, val_data: tuple,
        config: TrainConfig | None = None, norm_stats: tuple | None = None,
        input_shape: tuple | None = None) -> TrainedModel:
    """Mini-batch SGD with momentum and early stopping on validation loss.

    train_data/val_data are (inputs, labels) already shaped for the family
    (see prepare_inputs). Deterministic given (spec, data, config).
    """
    config = config or TrainConfig()
    x_train, y_train = train_data
    x_val, y_val = val_data
    model = build_model(spec, input_shape=input_shape)

    velocity = {name: np.zeros_like(p) for name, p, _ in model.named_params()}
    rng = np.random.Generator(np.random.PCG64(config.seed))

    best_loss = _eval_loss(model, x_val, y_val)
    best_state = {name: p.copy() for name, p, _ in model.named_params()}
    eval_history = [best_loss]
    loss_history = []
    stale = 0
    n = len(y_train)
    step = 0

    for epoch in range(config.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            xb, yb = x_train[idx], y_train[idx]
            model.zero_grads()
            probs = model.forward(xb, train=True, rng=rng)
            loss = cross_entropy(probs, yb, config.class_weights)
            if config.nan_check and not np.isfinite(loss):
                raise TrainingError("training loss is not finite", step)
            model.backward(probs, yb, config.class_weights)
            for name, p, g in model.named_params():
                v = velocity[name]
                v *= config.momentum
                v -= config.learning_rate * g
                p += v
            loss_history.append(loss)
            step += 1

        val_loss = _eval_loss(model, x_val, y_val)
        eval_history.append(val_loss)
        if val_loss < best_loss:
            best_loss = val_loss
            best_state = {name: p.copy() for name, p, _ in model.named_params()}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    model.load_state(best_state)
    metrics = _val_metrics(model, x_val, y_val)
    metrics["loss_history_len"] = len(loss_history)
    metrics["eval_history"] = eval_history
    return TrainedModel(
        spec=spec,
        params=best_state,
        norm_stats=norm_stats,
        provenance=default_provenance(),
        train_seed=config.seed,
        val_metrics=metrics,
        input_shape=input_shape,
    )


# Hyperparameter search -------------------------------------------------------

# Verbatim learning-rate list; 0.001 appears twice in the source grid and is
# deduplicated for sampling (the manifest keeps the raw list for the record).
LEARNING_RATES_RAW = (0.01, 0.001, 0.001, 0.0001, 0.00001)


@dataclass(frozen=True)
class SearchSpace:
    learning_rate: tuple = (0.01, 0.001, 0.0001, 0.00001)
    lookback: tuple = (3, 5, 10, 20, 30)
    dropout_rate: tuple = (0.0, 0.2, 0.4, 0.6, 0.8, 0.9)
    hidden_units: tuple = (100, 200, 400, 800, 1000, 2000, 5000)
    n_layers: tuple = (1, 2, 3, 5, 7, 8, 15)
    filter_size: tuple = (3, 5, 7)
    n_trials: int = 50

    def sample(self, rng: np.random.Generator) -> dict:
        """One independent uniform draw from every listed set."""
        return {
            "learning_rate": float(rng.choice(self.learning_rate)),
            "lookback": int(rng.choice(self.lookback)),
            "dropout_rate": float(rng.choice(self.dropout_rate)),
            "hidden_units": int(rng.choice(self.hidden_units)),
            "n_layers": int(rng.choice(self.n_layers)),
            "filter_size": int(rng.choice(self.filter_size)),
        }


def spec_from_config(family: str, representation: str, config: dict, seed: int) -> ModelSpec:
    """Build a ModelSpec from sampled hyperparameters.

    The sampled dropout_rate is a drop probability; layers keep
    activations with probability 1 - rate.
    """
    return ModelSpec(
        family=family,
        representation=representation,
        lookback=config["lookback"],
        hidden_size=config["hidden_units"],
        n_layers=config["n_layers"],
        dropout_keep=1.0 - config["dropout_rate"],
        filter_size=config["filter_size"],
        seed=seed,
    )


@dataclass
class TrialResult:
    index: int
    seed: int
    config: dict
    status: str                      # "ok" or "failed"
    metrics: dict | None = None
    error: str | None = None


def random_search(space: SearchSpace, budget: int, family: str, representation: str,
                  train_recs: list, val_recs: list, seed: int = 0,
                  train_config: TrainConfig | None = None,
                  manifest_path=None) -> tuple[list[TrialResult], TrainedModel | None]:
    """Random search: rank trials by validation kappa, ties by accuracy then index.

    Every trial's config and metrics are appended to a line-delimited
    manifest when a path is given. A failed trial is recorded, not fatal.
    """
    if budget < 1:
        raise ParameterError(f"search budget must be >= 1, got {budget}")
    rng = np.random.Generator(np.random.PCG64(seed))
    base = train_config or TrainConfig()
    results: list[TrialResult] = []
    best_model = None
    best_key = None

    manifest = open(manifest_path, "w", encoding="utf-8") if manifest_path else None
    try:
        if manifest:
            manifest.write(json.dumps({
                "kind": "search-header", "family": family,
                "representation": representation, "seed": seed, "budget": budget,
                "learning_rates_raw": list(LEARNING_RATES_RAW),
                "space": {k: list(v) for k, v in (
                    ("learning_rate", space.learning_rate), ("lookback", space.lookback),
                    ("dropout_rate", space.dropout_rate), ("hidden_units", space.hidden_units),
                    ("n_layers", space.n_layers), ("filter_size", space.filter_size))},
            }) + "\n")
        for trial in range(budget):
            config = space.sample(rng)
            trial_seed = seed * 10000 + trial
            record = TrialResult(index=trial, seed=trial_seed, config=config, status="ok")
            try:
                spec = spec_from_config(family, representation, config, trial_seed)
                tc = TrainConfig(
                    learning_rate=config["learning_rate"],
                    momentum=base.momentum, batch_size=base.batch_size,
                    max_epochs=base.max_epochs, patience=base.patience,
                    seed=trial_seed, class_weights=base.class_weights)
                x_train, y_train = assemble_dataset(spec, train_recs)
                x_val, y_val = assemble_dataset(spec, val_recs)
                tm = fit(spec, (x_train, y_train), (x_val, y_val), tc)
                record.metrics = {k: tm.val_metrics[k] for k in ("loss", "accuracy", "kappa")}
                key = (-record.metrics["kappa"], -record.metrics["accuracy"], trial)
                if best_key is None or key < best_key:
                    best_key, best_model = key, tm
            except Exception as e:  # a failed trial is data, not a crash
                record.status = "failed"
                record.error = f"{type(e).__name__}: {e}"
            results.append(record)
            if manifest:
                manifest.write(json.dumps({
                    "kind": "trial", "index": record.index, "seed": record.seed,
                    "config": record.config, "status": record.status,
                    "metrics": record.metrics, "error": record.error,
                }) + "\n")
    finally:
        if manifest:
            manifest.close()

    def rank_key(r: TrialResult):
        if r.status != "ok":
            return (1, 0.0, 0.0, r.index)
        return (0, -r.metrics["kappa"], -r.metrics["accuracy"], r.index)

    return sorted(results, key=rank_key), best_model


# Model store ------------------------------------------------------------------

MODEL_MAGIC = b"SOMD"
MODEL_FORMAT_VERSION = 1


def save_model(tm: TrainedModel) -> bytes:
    """Serialize: magic, version, JSON metadata, float64 weight blobs, CRC32."""
    weight_manifest = [{"name": name, "shape": list(arr.shape)}
                       for name, arr in tm.params.items()]
    meta = {
        "spec": tm.spec.as_dict(),
        "input_shape": list(tm.input_shape) if tm.input_shape else None,
        "norm_stats": None if tm.norm_stats is None else
            {"mean": list(map(float, tm.norm_stats[0])),
             "std": list(map(float, tm.norm_stats[1]))},
        "provenance": tm.provenance,
        "train_seed": tm.train_seed,
        "val_metrics": tm.val_metrics,
        "weights": weight_manifest,
    }
    meta_blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MODEL_MAGIC)
    buf.write(struct.pack("<I", MODEL_FORMAT_VERSION))
    buf.write(struct.pack("<Q", len(meta_blob)))
    buf.write(meta_blob)
    for name, arr in tm.params.items():
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    body = buf.getvalue()
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def save_model_file(path, tm: TrainedModel) -> None:
    with open(path, "wb") as f:
        f.write(save_model(tm))


def load_model(data: bytes) -> TrainedModel:
    if len(data) < 20 or data[:4] != MODEL_MAGIC:
        raise DataError("not a model store file")
    (stored_crc,) = struct.unpack("<I", data[-4:])
    actual = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if stored_crc != actual:
        raise ChecksumError(f"model store checksum mismatch: stored {stored_crc:#010x}, "
                            f"computed {actual:#010x}")
    (version,) = struct.unpack("<I", data[4:8])
    if version != MODEL_FORMAT_VERSION:
        raise FormatVersionError(f"unknown model store version {version}")
    (meta_len,) = struct.unpack("<Q", data[8:16])
    meta = json.loads(data[16:16 + meta_len].decode("utf-8"))
    offset = 16 + meta_len
    params = {}
    for entry in meta["weights"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(data, dtype="<f8", count=size, offset=offset).reshape(shape)
        params[entry["name"]] = arr.copy()
        offset += size * 8
    norm = meta.get("norm_stats")
    return TrainedModel(
        spec=ModelSpec.from_dict(meta["spec"]),
        params=params,
        norm_stats=None if norm is None else
            (np.array(norm["mean"]), np.array(norm["std"])),
        provenance=meta["provenance"],
        train_seed=meta["train_seed"],
        val_metrics=meta["val_metrics"],
        input_shape=tuple(meta["input_shape"]) if meta.get("input_shape") else None,
    )


def load_model_file(path) -> TrainedModel:
    with open(path, "rb") as f:
        return load_model(f.read())
