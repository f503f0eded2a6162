"""Agreement metrics between expert and predicted hypnograms.

Confusion rows are the expert stage, columns the prediction, both in
W, N1, N2, N3, R order. Cohen's kappa is (p0 - pe) / (1 - pe) with p0
the observed agreement and pe the chance agreement from the marginals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .hypnogram import N_STAGES, STAGES, Hypnogram


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (5, 5) nonnegative integers
    n_total: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (N_STAGES, N_STAGES):
            raise DataError(f"confusion matrix must be 5x5, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise DataError("confusion counts must be nonnegative")
        if int(self.counts.sum()) != self.n_total:
            raise DataError("confusion counts do not sum to n_total")

    def normalized(self) -> np.ndarray:
        """Row-normalized matrix; all-zero rows stay zero."""
        row_sums = self.counts.sum(axis=1, keepdims=True).astype(np.float64)
        safe = np.where(row_sums == 0, 1.0, row_sums)
        out = self.counts / safe
        return out

    def empty_rows(self) -> list[str]:
        """Stages absent from the expert hypnogram (their normalized row is zero)."""
        return [STAGES[i] for i in np.flatnonzero(self.counts.sum(axis=1) == 0)]


@dataclass
class KappaResult:
    p0: float
    pe: float
    kappa: float
    degenerate: bool = False  # pe == 1: both raters constant and identical


def confusion(expert: Hypnogram, pred: Hypnogram) -> ConfusionMatrix:
    if len(expert) != len(pred):
        raise DataError(f"hypnogram lengths differ: {len(expert)} vs {len(pred)}")
    if len(expert) < 1:
        raise DataError("hypnograms are empty")
    counts = np.zeros((N_STAGES, N_STAGES), dtype=np.int64)
    np.add.at(counts, (expert.stages, pred.stages), 1)
    return ConfusionMatrix(counts=counts, n_total=len(expert))


def kappa(cm: ConfusionMatrix) -> KappaResult:
    if cm.n_total < 1:
        raise DataError("empty confusion matrix")
    n = float(cm.n_total)
    p0 = float(np.trace(cm.counts)) / n
    row = cm.counts.sum(axis=1) / n
    col = cm.counts.sum(axis=0) / n
    pe = float(row @ col)
    if pe >= 1.0 - 1e-15:
        # Both raters constant and identical: the formula is 0/0. Call it
        # perfect agreement when p0 = 1, zero otherwise, and flag it.
        return KappaResult(p0=p0, pe=pe, kappa=1.0 if p0 >= 1.0 - 1e-15 else 0.0,
                           degenerate=True)
    return KappaResult(p0=p0, pe=pe, kappa=(p0 - pe) / (1.0 - pe))


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.n_total < 1:
        raise DataError("empty confusion matrix")
    return float(np.trace(cm.counts)) / float(cm.n_total)


def per_stage_recall(cm: ConfusionMatrix) -> dict:
    """Diagonal of the row-normalized matrix; None for absent stages."""
    out = {}
    norm = cm.normalized()
    present = cm.counts.sum(axis=1) > 0
    for i, s in enumerate(STAGES):
        out[s] = float(norm[i, i]) if present[i] else None
    return out


def per_stage_precision(cm: ConfusionMatrix) -> dict:
    out = {}
    col_sums = cm.counts.sum(axis=0)
    for i, s in enumerate(STAGES):
        out[s] = float(cm.counts[i, i] / col_sums[i]) if col_sums[i] > 0 else None
    return out


def aggregate_metrics(pairs: list) -> dict:
    """Epoch-weighted (primary) and per-recording-averaged accuracy/kappa.

    ``pairs`` is a list of (expert, predicted) hypnogram pairs, one per
    recording. The pooled numbers weight every epoch equally; the
    averaged numbers weight every recording equally.
    """
    if not pairs:
        raise DataError("no hypnogram pairs to aggregate")
    pooled = np.zeros((N_STAGES, N_STAGES), dtype=np.int64)
    per_acc, per_kappa = [], []
    for expert, pred in pairs:
        cm = confusion(expert, pred)
        pooled += cm.counts
        per_acc.append(accuracy(cm))
        per_kappa.append(kappa(cm).kappa)
    pooled_cm = ConfusionMatrix(counts=pooled, n_total=int(pooled.sum()))
    return {
        "epoch_weighted": {"accuracy": accuracy(pooled_cm),
                           "kappa": kappa(pooled_cm).kappa},
        "per_recording_mean": {"accuracy": float(np.mean(per_acc)),
                               "kappa": float(np.mean(per_kappa))},
        "n_recordings": len(pairs),
        "n_epochs": pooled_cm.n_total,
    }


def metrics_report(expert: Hypnogram, pred: Hypnogram) -> dict:
    """Structured metrics document: counts, normalized matrix, accuracy, kappa, recalls."""
    cm = confusion(expert, pred)
    k = kappa(cm)
    return {
        "n_epochs": cm.n_total,
        "stage_order": list(STAGES),
        "counts": cm.counts.tolist(),
        "normalized": [[round(v, 12) for v in row] for row in cm.normalized().tolist()],
        "accuracy": accuracy(cm),
        "kappa": k.kappa,
        "p0": k.p0,
        "pe": k.pe,
        "kappa_degenerate": k.degenerate,
        "per_stage_recall": per_stage_recall(cm),
        "per_stage_precision": per_stage_precision(cm),
        "empty_expert_rows": cm.empty_rows(),
    }
