"""Multitaper spectral estimation on 30-second EEG epochs.

Each epoch is cut into 29 two-second sub-epochs with one-second overlap
(400 samples at 200 Hz, hop 200). Every sub-epoch is demeaned, windowed
by a bank of DPSS (Slepian) tapers, zero-padded to 512 points, and the
taper periodograms are averaged into a one-sided PSD on 257 bins
spanning 0-100 Hz. Power is kept in linear units internally; dB is a
display/export conversion only.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ParameterError, ShapeError
from .recording import Montage

FS = 200.0
WINDOW_SAMPLES = 400
HOP_SAMPLES = 200
FFT_N = 512
N_FREQ_BINS = FFT_N // 2 + 1  # 257
N_SUBEPOCHS = 29
EPOCH_SAMPLES = 6000
DEFAULT_NW = 3.0
# K = 4 rather than the 2NW-1 = 5 rule: the 5th taper's weaker concentration
# turns a pure tone into a flat ripple plateau whose argmax drifts more than
# one bin off the true frequency; 4 tapers keep the peak on-bin.
DEFAULT_K = 4
FREQ_STEP_HZ = FS / FFT_N  # 0.390625

DB_FLOOR = 1e-10


@dataclass(frozen=True)
class TaperBank:
    """Orthonormal DPSS tapers with their spectral-concentration eigenvalues."""

    n: int
    nw: float
    k: int
    tapers: np.ndarray       # (k, n), rows orthonormal
    eigenvalues: np.ndarray  # (k,), concentration ratios in (0, 1], descending


def dpss(n: int, nw: float, k: int) -> TaperBank:
    """Compute the first k Slepian sequences of length n at time-bandwidth nw.

    Uses the symmetric tridiagonal formulation: the tapers are the k
    top eigenvectors of the matrix with diagonal ((n-1-2t)/2)^2 cos(2*pi*W)
    and off-diagonal t(n-t)/2, where W = nw/n. The reported eigenvalues
    are the in-band energy concentrations v' A v with A the sinc kernel
    of half-bandwidth W.
    """
    if k < 1 or k > 2 * nw - 1:
        raise ParameterError(f"taper count k={k} must satisfy 1 <= k <= 2*nw-1 = {2 * nw - 1}")
    if n < 2 * k:
        raise ParameterError(f"window length n={n} too short for k={k} tapers")
    w = nw / n
    t = np.arange(n)
    diag = ((n - 1 - 2 * t) / 2.0) ** 2 * np.cos(2 * np.pi * w)
    off = np.arange(1, n) * np.arange(n - 1, 0, -1) / 2.0
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(n - k, n - 1))
    tapers = vecs[:, ::-1].T  # descending by tridiagonal eigenvalue

    # Sign convention: positive mean when the taper has one (even orders),
    # otherwise positive first nonzero element.
    for i in range(k):
        m = tapers[i].sum()
        if abs(m) > 1e-9:
            if m < 0:
                tapers[i] = -tapers[i]
        else:
            nz = np.flatnonzero(np.abs(tapers[i]) > 1e-12)
            if nz.size and tapers[i, nz[0]] < 0:
                tapers[i] = -tapers[i]

    eig = _concentrations(tapers, w)
    order = np.argsort(eig)[::-1]
    return TaperBank(n=n, nw=float(nw), k=k, tapers=tapers[order], eigenvalues=eig[order])


def _concentrations(tapers: np.ndarray, w: float) -> np.ndarray:
    """In-band energy fraction of each taper: v' A v with A the sinc kernel."""
    n = tapers.shape[1]
    i = np.arange(n)
    d = i[:, None] - i[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.sin(2 * np.pi * w * d) / (np.pi * d)
    a[np.diag_indices(n)] = 2 * w
    return np.einsum("kn,nm,km->k", tapers, a, tapers)


def mt_psd(x: np.ndarray, bank: TaperBank) -> np.ndarray:
    """One-sided multitaper PSD of a single window, length bank.n -> 257 bins.

    The window is demeaned, multiplied by each taper, zero-padded to 512
    points, and the squared FFT magnitudes are averaged over tapers and
    scaled by 1/fs. Interior bins (1..255) are doubled to fold negative
    frequencies; DC and Nyquist are not.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (bank.n,):
        raise ShapeError(f"expected window of {bank.n} samples, got shape {x.shape}")
    return _psd_of_windows(x[None, :], bank)[0]


def _psd_of_windows(windows: np.ndarray, bank: TaperBank) -> np.ndarray:
    """Vectorized multitaper PSD of (m, n) windows -> (m, 257)."""
    demeaned = windows - windows.mean(axis=1, keepdims=True)
    tapered = bank.tapers[:, None, :] * demeaned[None, :, :]  # (k, m, n)
    spec = np.fft.rfft(tapered, n=FFT_N, axis=-1)
    power = (spec.real**2 + spec.imag**2).mean(axis=0) / FS  # (m, 257)
    power[:, 1:-1] *= 2.0
    return power


def freq_axis() -> np.ndarray:
    """Frequency of each of the 257 bins: k * (200/512) Hz, 0..100 inclusive."""
    return np.arange(N_FREQ_BINS) * FREQ_STEP_HZ


def subepoch_axis() -> np.ndarray:
    """Start time in seconds of each of the 29 sub-epochs: 0..28."""
    return np.arange(N_SUBEPOCHS, dtype=np.float64)


@dataclass
class EpochSpectra:
    """All spectrogram views of one 30-second epoch.

    channels: per derived channel, montage order, (6, 29, 257)
    pairs: contralateral pair averages (frontal, central, occipital), (3, 29, 257)
    mean: six-channel average for display, (29, 257)
    """

    channels: np.ndarray
    pairs: np.ndarray
    mean: np.ndarray


def spectrogram_epoch(epoch: np.ndarray, bank: TaperBank, montage: Montage | None = None) -> EpochSpectra:
    """Multitaper spectrogram of one epoch of shape (6000, 6) -> EpochSpectra."""
    epoch = np.asarray(epoch, dtype=np.float64)
    if epoch.ndim != 2 or epoch.shape[0] != EPOCH_SAMPLES:
        raise ShapeError(f"expected epoch of shape (6000, n_channels), got {epoch.shape}")
    n_ch = epoch.shape[1]
    starts = np.arange(N_SUBEPOCHS) * HOP_SAMPLES
    idx = starts[:, None] + np.arange(bank.n)[None, :]  # (29, 400)

    grids = np.empty((n_ch, N_SUBEPOCHS, N_FREQ_BINS))
    for c in range(n_ch):
        grids[c] = _psd_of_windows(epoch[:, c][idx], bank)

    if montage is None:
        montage = Montage()
    pair_idx = montage.pair_channel_indices()
    pairs = np.stack([(grids[a] + grids[b]) / 2.0 for a, b in pair_idx])
    return EpochSpectra(channels=grids, pairs=pairs, mean=grids.mean(axis=0))


@dataclass
class SpectrogramTensor:
    """Per-epoch 29x257 power grids for one view of a recording."""

    values: np.ndarray  # (n_epochs, 29, 257), linear power, nonnegative
    freq_axis: np.ndarray
    subepoch_axis: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[1:] != (N_SUBEPOCHS, N_FREQ_BINS):
            raise ShapeError(f"spectrogram tensor must be (n, 29, 257), got {self.values.shape}")


def to_db(power: np.ndarray) -> np.ndarray:
    """Linear power -> dB for display/export: 10*log10(S + 1e-10)."""
    return 10.0 * np.log10(power + DB_FLOOR)


SPECTROGRAM_MAGIC = b"SOMS"
SPECTROGRAM_FORMAT_VERSION = 1


def write_spectrogram(path, st: SpectrogramTensor) -> None:
    """Versioned binary export: header + little-endian float32, epoch-major."""
    n = st.values.shape[0]
    with open(path, "wb") as f:
        f.write(SPECTROGRAM_MAGIC)
        f.write(struct.pack("<IQII", SPECTROGRAM_FORMAT_VERSION, n, N_SUBEPOCHS, N_FREQ_BINS))
        f.write(st.values.astype("<f4").tobytes())


def read_spectrogram(path) -> SpectrogramTensor:
    from .errors import FormatVersionError, DataError

    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != SPECTROGRAM_MAGIC:
            raise DataError(f"not a spectrogram container (magic {magic!r})")
        version, n, rows, cols = struct.unpack("<IQII", f.read(20))
        if version != SPECTROGRAM_FORMAT_VERSION:
            raise FormatVersionError(f"unknown spectrogram format version {version}")
        data = np.frombuffer(f.read(n * rows * cols * 4), dtype="<f4")
    values = data.reshape(n, rows, cols).astype(np.float64)
    return SpectrogramTensor(values=values, freq_axis=freq_axis(), subepoch_axis=subepoch_axis())


def write_spectrogram_csv(path, st: SpectrogramTensor) -> None:
    """CSV export for small fixtures: epoch, subepoch, then 257 power columns."""
    with open(path, "w", encoding="utf-8") as f:
        header = "epoch,subepoch," + ",".join(f"f{i}" for i in range(N_FREQ_BINS))
        f.write(header + "\n")
        for e in range(st.values.shape[0]):
            for s in range(N_SUBEPOCHS):
                row = ",".join(repr(float(v)) for v in st.values[e, s])
                f.write(f"{e},{s},{row}\n")
