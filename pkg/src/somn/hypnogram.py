"""Hypnogram: the per-epoch sequence of sleep stages over a recording.

Stages follow the AASM five-class convention and are ordered W, N1, N2,
N3, R everywhere in this package (confusion matrices, softmax outputs,
transition matrices all use this order).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

STAGES = ("W", "N1", "N2", "N3", "R")
STAGE_INDEX = {s: i for i, s in enumerate(STAGES)}
N_STAGES = len(STAGES)
EPOCH_SECONDS = 30
SLEEP_STAGES = ("N1", "N2", "N3", "R")


@dataclass
class Hypnogram:
    """Per-epoch stage labels, stored as indices into STAGES.

    ``confidence`` is optional and, when present, must have one value in
    [0, 1] per epoch.
    """

    stages: np.ndarray
    confidence: np.ndarray | None = None
    epoch_seconds: int = field(default=EPOCH_SECONDS)

    def __post_init__(self):
        self.stages = np.asarray(self.stages, dtype=np.int64)
        if self.stages.ndim != 1:
            raise DataError("hypnogram stages must be a 1-D sequence")
        if self.stages.size and (self.stages.min() < 0 or self.stages.max() >= N_STAGES):
            raise DataError("hypnogram contains a stage index outside 0..4")
        if self.confidence is not None:
            self.confidence = np.asarray(self.confidence, dtype=np.float64)
            if self.confidence.shape != self.stages.shape:
                raise DataError("confidence length does not match stage count")

    def __len__(self) -> int:
        return int(self.stages.size)

    def symbols(self) -> list[str]:
        return [STAGES[i] for i in self.stages]

    @classmethod
    def from_symbols(cls, symbols, confidence=None) -> "Hypnogram":
        idx = []
        for lineno, s in enumerate(symbols, start=1):
            if s not in STAGE_INDEX:
                raise DataError(f"unknown stage symbol {s!r} at position {lineno}")
            idx.append(STAGE_INDEX[s])
        return cls(np.array(idx, dtype=np.int64), confidence=confidence)


def read_sidecar(path) -> Hypnogram:
    """Read a sidecar hypnogram: UTF-8 text, one stage symbol per line."""
    with open(path, "r", encoding="utf-8") as f:
        symbols = [line.strip() for line in f if line.strip()]
    return Hypnogram.from_symbols(symbols)


def write_sidecar(path, h: Hypnogram) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in h.symbols():
            f.write(s + "\n")


def write_confidence(path, h: Hypnogram) -> None:
    """Write per-epoch confidence, one value per line, paired with a sidecar."""
    if h.confidence is None:
        raise DataError("hypnogram has no confidence values")
    with open(path, "w", encoding="utf-8") as f:
        for c in h.confidence:
            f.write(f"{c:.6f}\n")
