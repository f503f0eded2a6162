"""Recording-level assembly of the three input representations.

For every whole 30-second epoch of a canonical recording this produces
the raw tensor (6000 x 6 per epoch), the six-channel-average multitaper
spectrogram (29 x 257 per epoch), and the 96-dimension expert feature
vector. Extraction is deterministic and independent across epochs; the
pair-averaged grids are consumed inside feature extraction and not kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .features import FeatureMatrix, expert_features, feature_names
from .recording import Montage, Recording, epoch_count
from .spectral import (DEFAULT_K, DEFAULT_NW, EPOCH_SAMPLES, N_FREQ_BINS, N_SUBEPOCHS,
                       SpectrogramTensor, TaperBank, dpss, freq_axis, spectrogram_epoch,
                       subepoch_axis)


@dataclass
class RawEpochTensor:
    """Raw microvolt samples per epoch: (n_epochs, 6000, 6), montage order."""

    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[1:] != (EPOCH_SAMPLES, 6):
            raise ShapeError(f"raw epoch tensor must be (n, 6000, 6), got {self.values.shape}")


@dataclass
class EpochRepresentations:
    """Per-epoch representations of a recording. raw is None when not retained."""

    raw: RawEpochTensor | None
    spectrogram: SpectrogramTensor  # six-channel-average view
    features: FeatureMatrix


def default_taper_bank() -> TaperBank:
    return dpss(400, DEFAULT_NW, DEFAULT_K)


def extract_representations(rec: Recording, bank: TaperBank | None = None,
                            montage: Montage | None = None,
                            keep_raw: bool = True) -> EpochRepresentations:
    bank = bank or default_taper_bank()
    montage = montage or Montage()
    n = epoch_count(rec)
    x = rec.sample_matrix()

    raw = np.empty((n, EPOCH_SAMPLES, 6)) if keep_raw else None
    mean_grids = np.empty((n, N_SUBEPOCHS, N_FREQ_BINS))
    feats = np.empty((n, 96))
    for t in range(n):
        epoch = x[t * EPOCH_SAMPLES:(t + 1) * EPOCH_SAMPLES]
        spectra = spectrogram_epoch(epoch, bank, montage)
        mean_grids[t] = spectra.mean
        feats[t] = expert_features(epoch, spectra.pairs)
        if keep_raw:
            raw[t] = epoch

    return EpochRepresentations(
        raw=RawEpochTensor(values=raw) if keep_raw else None,
        spectrogram=SpectrogramTensor(values=mean_grids, freq_axis=freq_axis(),
                                      subepoch_axis=subepoch_axis()),
        features=FeatureMatrix(values=feats, names=feature_names(montage)),
    )
