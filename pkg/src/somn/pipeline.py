"""End-to-end scoring pipeline shared by the CLI and the HTTP service.

Takes a recording file (EDF or internal container), derives the montage,
extracts the representation the model was trained on, and yields stage
probabilities progressively in epoch order.
"""

from __future__ import annotations

from typing import Callable, Iterator

import numpy as np

from .edf import parse_edf
from .errors import DataError
from .extract import default_taper_bank, extract_representations
from .hypnogram import Hypnogram
from .recording import (Montage, Recording, derive_montage, epoch_count,
                        read_recording, read_recording_bytes)
from .report import confidence_of, sleep_stats
from .spectral import TaperBank
from .train import TrainedModel, predict_probs, prepare_inputs

SCORE_CHUNK = 32


def load_recording_file(path) -> Recording:
    """Parse a recording from EDF (by extension/magic) or the internal container."""
    with open(path, "rb") as f:
        head = f.read(4)
    if head == b"SOMN":
        return read_recording(path)
    with open(path, "rb") as f:
        return parse_edf(f.read())


def load_recording_bytes(data: bytes) -> Recording:
    if data[:4] == b"SOMN":
        return read_recording_bytes(data)
    return parse_edf(data)


def representation_values(rec: Recording, representation: str,
                          bank: TaperBank | None = None) -> np.ndarray:
    """Per-epoch arrays for one representation of a canonical recording."""
    reps = extract_representations(rec, bank or default_taper_bank(),
                                   keep_raw=(representation == "raw"))
    if representation == "expert":
        return reps.features.values
    if representation == "spectrogram":
        return reps.spectrogram.values
    if representation == "raw":
        return reps.raw.values
    raise DataError(f"unknown representation {representation!r}")


def normalize_for_model(tm: TrainedModel, values: np.ndarray) -> np.ndarray:
    if tm.norm_stats is None:
        return values
    mean, std = tm.norm_stats
    scale = np.where(np.asarray(std) < 1e-12, 1.0, std)
    return (values - mean) / scale


def score_probs(tm: TrainedModel, rec: Recording,
                bank: TaperBank | None = None,
                progress: Callable[[int], None] | None = None) -> np.ndarray:
    """Stage probabilities for every epoch, computed in chunks in epoch order."""
    model = tm.model()
    values = normalize_for_model(tm, representation_values(rec, tm.spec.representation, bank))
    x = prepare_inputs(tm.spec, values)
    n = x.shape[0]
    out = np.empty((n, 5))
    for start in range(0, n, SCORE_CHUNK):
        end = min(start + SCORE_CHUNK, n)
        out[start:end] = predict_probs(model, x[start:end])
        if progress is not None:
            progress(end)
    return out


def iter_score(tm: TrainedModel, rec: Recording,
               bank: TaperBank | None = None) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (epoch_index, probability row) progressively."""
    model = tm.model()
    values = normalize_for_model(tm, representation_values(rec, tm.spec.representation, bank))
    x = prepare_inputs(tm.spec, values)
    for start in range(0, x.shape[0], SCORE_CHUNK):
        chunk = predict_probs(model, x[start:start + SCORE_CHUNK])
        for i, row in enumerate(chunk):
            yield start + i, row


def scored_hypnogram(probs: np.ndarray) -> Hypnogram:
    return Hypnogram(probs.argmax(axis=1), confidence=confidence_of(probs))


def canonical(rec: Recording, montage: Montage | None = None) -> Recording:
    """Montage-derived 200 Hz recording; raises if no whole epoch exists."""
    out = derive_montage(rec, montage)
    if epoch_count(out) == 0:
        raise DataError("no complete epochs in recording")
    return out


def case_summary(probs: np.ndarray, expert: Hypnogram | None) -> dict:
    """Prediction document: hypnogram, confidence, report, disagreements."""
    pred = scored_hypnogram(probs)
    doc = {
        "stages": pred.symbols(),
        "confidence": [float(c) for c in pred.confidence],
        "probabilities": [[float(v) for v in row] for row in probs],
        "sleep_report": sleep_stats(pred).as_dict(),
    }
    if expert is not None:
        if len(expert) != len(pred):
            raise DataError(
                f"expert hypnogram length {len(expert)} != epoch count {len(pred)}")
        doc["expert_stages"] = expert.symbols()
        doc["disagreements"] = [int(t) for t in
                                np.flatnonzero(expert.stages != pred.stages)]
    return doc
