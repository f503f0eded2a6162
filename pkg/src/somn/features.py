"""Expert feature extraction: 96 values per 30-second epoch.

Layout (stable, documented; index ranges inclusive):
  0..5    line length per derived channel, montage order
  6..11   kurtosis per derived channel
  12..83  band-power ratio statistics: for each ratio family in order
          (delta/total, theta/total, alpha/total, delta/theta,
          theta/alpha, delta/alpha), for each contralateral pair in order
          (frontal, central, occipital), the (p95, min, mean, std) of the
          per-sub-epoch ratio series — 6 x 3 x 4 = 72 values
  84..95  temporal kurtosis of per-sub-epoch band power for each band
          (delta, theta, alpha, sigma) x pair — 4 x 3 = 12 values

Band powers are sums of PSD bins whose frequency k*(200/512) Hz satisfies
lo <= f < hi, with delta 0.5-4, theta 4-8, alpha 8-12, sigma 12-20 and
total 0-20 Hz. Ratio series use an epsilon of 1e-10 in the denominator so
silent epochs yield zeros instead of NaNs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError, ShapeError
from .recording import Montage
from .spectral import EPOCH_SAMPLES, FREQ_STEP_HZ, N_FREQ_BINS, N_SUBEPOCHS

N_FEATURES = 96
RATIO_EPS = 1e-10
DEGENERATE_STD = 1e-12

BANDS_HZ = {
    "delta": (0.5, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 12.0),
    "sigma": (12.0, 20.0),
    "total": (0.0, 20.0),
}
RATIO_FAMILIES = (
    ("delta_total", "delta", "total"),
    ("theta_total", "theta", "total"),
    ("alpha_total", "alpha", "total"),
    ("delta_theta", "delta", "theta"),
    ("theta_alpha", "theta", "alpha"),
    ("delta_alpha", "delta", "alpha"),
)
KURT_BANDS = ("delta", "theta", "alpha", "sigma")
STATS = ("p95", "min", "mean", "std")


def band_bins(band: str) -> np.ndarray:
    """PSD bin indices belonging to a named band."""
    lo, hi = BANDS_HZ[band]
    k = np.arange(N_FREQ_BINS)
    f = k * FREQ_STEP_HZ
    return k[(f >= lo) & (f < hi)]


_BAND_BINS = {name: band_bins(name) for name in BANDS_HZ}


def feature_names(montage: Montage | None = None) -> list[str]:
    """The 96 stable feature names, in storage order."""
    m = montage or Montage()
    names = [f"linelen.{ch}" for ch in m.derived_channel_names]
    names += [f"kurt.{ch}" for ch in m.derived_channel_names]
    for fam, _, _ in RATIO_FAMILIES:
        for pair in m.PAIR_NAMES:
            for stat in STATS:
                names.append(f"ratio.{fam}.{pair}.{stat}")
    for band in KURT_BANDS:
        for pair in m.PAIR_NAMES:
            names.append(f"kurt.band.{band}.{pair}")
    # 6 + 6 + 6*12 + 4*3 = 96
    assert len(names) == N_FEATURES
    return names


def line_length(x: np.ndarray) -> float:
    """Sum of absolute first differences; 0 iff the signal is constant."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.abs(np.diff(x)).sum())


def kurtosis(x: np.ndarray) -> float:
    """Pearson kurtosis m4/m2^2 with population moments.

    Returns 0 for (near-)constant input so flat epochs stay finite.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 4:
        raise ParameterError(f"kurtosis needs at least 4 samples, got {x.size}")
    centered = x - x.mean()
    m2 = np.mean(centered**2)
    if np.sqrt(m2) < DEGENERATE_STD:
        return 0.0
    return float(np.mean(centered**4) / m2**2)


def p95(series: np.ndarray) -> float:
    """95th percentile with linear interpolation between closest ranks."""
    s = np.sort(np.asarray(series, dtype=np.float64))
    if s.size == 0:
        raise ParameterError("p95 of empty series")
    rank = 0.95 * (s.size - 1)
    lo = int(np.floor(rank))
    hi = int(np.ceil(rank))
    frac = rank - lo
    return float(s[lo] + (s[hi] - s[lo]) * frac)


def _series_stats(series: np.ndarray) -> tuple[float, float, float, float]:
    return (p95(series), float(series.min()), float(series.mean()),
            float(series.std()))


def expert_features(epoch_raw: np.ndarray, pair_grids: np.ndarray) -> np.ndarray:
    """96-feature vector for one epoch.

    epoch_raw: (6000, 6) microvolt samples in montage order.
    pair_grids: (3, 29, 257) pair-averaged power grids (frontal, central,
    occipital).
    """
    epoch_raw = np.asarray(epoch_raw, dtype=np.float64)
    if epoch_raw.shape != (EPOCH_SAMPLES, 6):
        raise ShapeError(f"expected raw epoch (6000, 6), got {epoch_raw.shape}")
    pair_grids = np.asarray(pair_grids, dtype=np.float64)
    if pair_grids.shape != (3, N_SUBEPOCHS, N_FREQ_BINS):
        raise ShapeError(f"expected pair grids (3, 29, 257), got {pair_grids.shape}")
    if not np.isfinite(pair_grids).all():
        raise DataError("non-finite spectrogram values")

    out = np.empty(N_FEATURES)
    for c in range(6):
        out[c] = line_length(epoch_raw[:, c])
    for c in range(6):
        out[6 + c] = kurtosis(epoch_raw[:, c])

    # Per-pair band power series over the 29 sub-epochs.
    power = {
        band: pair_grids[:, :, _BAND_BINS[band]].sum(axis=2)  # (3, 29)
        for band in BANDS_HZ
    }

    i = 12
    for _, num, den in RATIO_FAMILIES:
        for pair in range(3):
            series = power[num][pair] / (power[den][pair] + RATIO_EPS)
            out[i:i + 4] = _series_stats(series)
            i += 4
    for band in KURT_BANDS:
        for pair in range(3):
            out[i] = kurtosis(power[band][pair])
            i += 1
    return out


@dataclass
class FeatureMatrix:
    """Feature vectors for every epoch of a recording, plus optional z-score stats."""

    values: np.ndarray           # (n_epochs, 96)
    names: list[str]
    norm_stats: tuple[np.ndarray, np.ndarray] | None = None  # (mean, std), each (96,)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != N_FEATURES:
            raise ShapeError(f"feature matrix must be (n, 96), got {self.values.shape}")
        if len(self.names) != N_FEATURES or len(set(self.names)) != N_FEATURES:
            raise DataError("feature names must be 96 unique strings")
        if self.values.size and not np.isfinite(self.values).all():
            raise DataError("feature matrix contains non-finite values")


def feature_stats(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column mean and population std used for z-scoring (train split only)."""
    values = np.asarray(values, dtype=np.float64)
    return values.mean(axis=0), values.std(axis=0)


def normalize_features(fm: FeatureMatrix, stats: tuple[np.ndarray, np.ndarray]) -> FeatureMatrix:
    """Z-score each column; degenerate columns (std < 1e-12) are centered only."""
    mean, std = (np.asarray(a, dtype=np.float64) for a in stats)
    if mean.shape != (N_FEATURES,) or std.shape != (N_FEATURES,):
        raise ShapeError("normalization stats must have 96 entries")
    scale = np.where(std < DEGENERATE_STD, 1.0, std)
    return FeatureMatrix(values=(fm.values - mean) / scale, names=list(fm.names),
                         norm_stats=(mean, std))


def denormalize_features(fm: FeatureMatrix, stats: tuple[np.ndarray, np.ndarray]) -> FeatureMatrix:
    mean, std = (np.asarray(a, dtype=np.float64) for a in stats)
    scale = np.where(std < DEGENERATE_STD, 1.0, std)
    return FeatureMatrix(values=fm.values * scale + mean, names=list(fm.names))


FEATURES_MAGIC = b"SOMF"
FEATURES_FORMAT_VERSION = 1


def write_features_csv(path, fm: FeatureMatrix) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(fm.names) + "\n")
        for row in fm.values:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def read_features_csv(path) -> FeatureMatrix:
    with open(path, "r", encoding="utf-8") as f:
        names = f.readline().rstrip("\n").split(",")
        rows = [np.array([float(v) for v in line.rstrip("\n").split(",")])
                for line in f if line.strip()]
    values = np.vstack(rows) if rows else np.empty((0, N_FEATURES))
    return FeatureMatrix(values=values, names=names)


def write_features(path, fm: FeatureMatrix) -> None:
    """Binary export mirroring the spectrogram container: float32 LE, epoch-major."""
    with open(path, "wb") as f:
        f.write(FEATURES_MAGIC)
        f.write(struct.pack("<IQI", FEATURES_FORMAT_VERSION, fm.values.shape[0], N_FEATURES))
        blob = "\n".join(fm.names).encode("utf-8")
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(fm.values.astype("<f4").tobytes())


def read_features(path) -> FeatureMatrix:
    from .errors import FormatVersionError

    with open(path, "rb") as f:
        if f.read(4) != FEATURES_MAGIC:
            raise DataError("not a feature container")
        version, n, width = struct.unpack("<IQI", f.read(16))
        if version != FEATURES_FORMAT_VERSION:
            raise FormatVersionError(f"unknown feature format version {version}")
        (blob_len,) = struct.unpack("<I", f.read(4))
        names = f.read(blob_len).decode("utf-8").split("\n")
        values = np.frombuffer(f.read(n * width * 4), dtype="<f4").reshape(n, width)
    return FeatureMatrix(values=values.astype(np.float64), names=names)
