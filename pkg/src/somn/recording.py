"""Recording data model: channels, montage derivation, epoching.

A canonical recording has exactly the six contralateral-mastoid-referenced
EEG channels (F3-M2, F4-M1, C3-M2, C4-M1, O1-M2, O2-M1) at 200 Hz.
Raw files may arrive with separate electrode channels (F3, M2, ...) or at
a different rate; ``derive_montage`` resamples and re-references them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatVersionError, MontageError
from .hypnogram import EPOCH_SECONDS, Hypnogram

CANONICAL_RATE_HZ = 200.0

ELECTRODES = ("F3", "F4", "C3", "C4", "O1", "O2")
MASTOIDS = ("M1", "M2")
# Contralateral reference: left electrodes (odd) -> M2, right (even) -> M1.
ELECTRODE_REFERENCE = {"F3": "M2", "F4": "M1", "C3": "M2", "C4": "M1", "O1": "M2", "O2": "M1"}


@dataclass
class ChannelSignal:
    """One channel: physical samples in microvolts plus scaling metadata."""

    label: str
    samples: np.ndarray
    sample_rate_hz: float = CANONICAL_RATE_HZ
    physical_range: tuple[float, float] = (-3276.8, 3276.7)
    digital_range: tuple[int, int] = (-32768, 32767)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise DataError(f"channel {self.label}: samples must be 1-D")
        dmin, dmax = self.digital_range
        if dmin >= dmax:
            raise DataError(f"channel {self.label}: digital min must be < digital max")
        pmin, pmax = self.physical_range
        if pmin == pmax:
            raise DataError(f"channel {self.label}: physical range is degenerate")


@dataclass
class Montage:
    """The six derived channels and their three contralateral pair groups."""

    derived_channel_names: tuple[str, ...] = (
        "F3-M2", "F4-M1", "C3-M2", "C4-M1", "O1-M2", "O2-M1",
    )
    pair_groups: dict = field(default_factory=lambda: {
        "frontal": ("F3-M2", "F4-M1"),
        "central": ("C3-M2", "C4-M1"),
        "occipital": ("O1-M2", "O2-M1"),
    })

    PAIR_NAMES = ("frontal", "central", "occipital")

    def __post_init__(self):
        if len(self.derived_channel_names) != 6:
            raise MontageError("montage must have exactly 6 derived channels")
        if len(self.pair_groups) != 3:
            raise MontageError("montage must have exactly 3 pair groups")
        seen = set()
        for pair in self.pair_groups.values():
            if seen & set(pair):
                raise MontageError("pair groups must be disjoint")
            seen |= set(pair)

    def pair_channel_indices(self) -> list[tuple[int, int]]:
        """Indices of each pair's two channels, in frontal/central/occipital order."""
        name_to_idx = {n: i for i, n in enumerate(self.derived_channel_names)}
        return [
            (name_to_idx[a], name_to_idx[b])
            for a, b in (self.pair_groups[p] for p in self.PAIR_NAMES)
        ]


@dataclass
class Recording:
    """Multichannel EEG time series with sampling metadata."""

    id: str
    channels: list[ChannelSignal]
    expert_hypnogram: Hypnogram | None = None
    start_time: str | None = None
    # Verbatim EDF header fields retained from parse so a rewrite is byte-identical.
    edf_meta: dict | None = None

    @property
    def sample_rate_hz(self) -> float:
        rates = {c.sample_rate_hz for c in self.channels}
        if len(rates) != 1:
            raise DataError(f"recording {self.id}: channels have mixed sample rates {sorted(rates)}")
        return rates.pop()

    @property
    def n_samples(self) -> int:
        lengths = {len(c.samples) for c in self.channels}
        if len(lengths) != 1:
            raise DataError(f"recording {self.id}: channels have mixed lengths {sorted(lengths)}")
        return lengths.pop()

    def channel_labels(self) -> list[str]:
        return [c.label for c in self.channels]

    def sample_matrix(self) -> np.ndarray:
        """Samples as (n_samples, n_channels), channel order preserved."""
        return np.stack([c.samples for c in self.channels], axis=1)


def epoch_count(r: Recording) -> int:
    """Number of whole 30-second epochs; a trailing partial epoch is dropped."""
    per_epoch = r.sample_rate_hz * EPOCH_SECONDS
    if per_epoch != int(per_epoch):
        raise DataError(f"sample rate {r.sample_rate_hz} does not divide 30 s into whole samples")
    return r.n_samples // int(per_epoch)


def epoch_slice(r: Recording, t: int) -> np.ndarray:
    """Raw samples of epoch t as (samples_per_epoch, n_channels)."""
    per_epoch = int(r.sample_rate_hz * EPOCH_SECONDS)
    n = epoch_count(r)
    if not 0 <= t < n:
        raise DataError(f"epoch index {t} out of range [0, {n})")
    return r.sample_matrix()[t * per_epoch:(t + 1) * per_epoch]


def resample_channel(c: ChannelSignal, rate_hz: float) -> ChannelSignal:
    """Linear-interpolation resampling (lossy above the new Nyquist)."""
    if c.sample_rate_hz == rate_hz:
        return c
    n_out = int(round(len(c.samples) * rate_hz / c.sample_rate_hz))
    t_old = np.arange(len(c.samples)) / c.sample_rate_hz
    t_new = np.arange(n_out) / rate_hz
    return ChannelSignal(
        label=c.label,
        samples=np.interp(t_new, t_old, c.samples),
        sample_rate_hz=rate_hz,
        physical_range=c.physical_range,
        digital_range=c.digital_range,
    )


def derive_montage(raw: Recording, m: Montage | None = None) -> Recording:
    """Reference each electrode to the contralateral mastoid at 200 Hz.

    Recordings already carrying the six derived labels pass through
    unchanged (apart from resampling if needed). For electrode recordings
    all of F3, F4, C3, C4, O1, O2, M1, M2 must be present.
    """
    if m is None:
        m = Montage()
    by_label = {c.label: c for c in raw.channels}

    if all(name in by_label for name in m.derived_channel_names):
        chans = [resample_channel(by_label[name], CANONICAL_RATE_HZ) for name in m.derived_channel_names]
        return Recording(id=raw.id, channels=chans,
                         expert_hypnogram=raw.expert_hypnogram, start_time=raw.start_time)

    for e in ELECTRODES + MASTOIDS:
        if e not in by_label:
            raise MontageError(f"missing electrode {e}")

    chans = []
    for name in m.derived_channel_names:
        electrode, mastoid = name.split("-")
        ec = resample_channel(by_label[electrode], CANONICAL_RATE_HZ)
        mc = resample_channel(by_label[mastoid], CANONICAL_RATE_HZ)
        if len(ec.samples) != len(mc.samples):
            raise MontageError(f"channels {electrode} and {mastoid} have different lengths")
        chans.append(ChannelSignal(
            label=name,
            samples=ec.samples - mc.samples,
            sample_rate_hz=CANONICAL_RATE_HZ,
            physical_range=ec.physical_range,
            digital_range=ec.digital_range,
        ))
    return Recording(id=raw.id, channels=chans,
                     expert_hypnogram=raw.expert_hypnogram, start_time=raw.start_time)


# Internal self-describing container for fixtures: "SOMN" magic, version,
# channel labels, rate, sample count, then little-endian float32 per channel.
RECORDING_MAGIC = b"SOMN"
RECORDING_FORMAT_VERSION = 1


def write_recording(path, r: Recording) -> None:
    n_samples = r.n_samples
    rate = r.sample_rate_hz
    with open(path, "wb") as f:
        f.write(RECORDING_MAGIC)
        f.write(struct.pack("<I", RECORDING_FORMAT_VERSION))
        rid = r.id.encode("utf-8")
        f.write(struct.pack("<H", len(rid)))
        f.write(rid)
        f.write(struct.pack("<IdQ", len(r.channels), rate, n_samples))
        for c in r.channels:
            lab = c.label.encode("utf-8")
            f.write(struct.pack("<H", len(lab)))
            f.write(lab)
        for c in r.channels:
            f.write(c.samples.astype("<f4").tobytes())


def read_recording(path) -> Recording:
    with open(path, "rb") as f:
        return read_recording_stream(f)


def read_recording_bytes(data: bytes) -> Recording:
    import io

    return read_recording_stream(io.BytesIO(data))


def read_recording_stream(f) -> Recording:
    def need(n: int, what: str) -> bytes:
        raw = f.read(n)
        if len(raw) != n:
            raise DataError(f"truncated recording container while reading {what}")
        return raw

    magic = need(4, "magic")
    if magic != RECORDING_MAGIC:
        raise DataError(f"not an internal recording container (magic {magic!r})")
    (version,) = struct.unpack("<I", need(4, "format version"))
    if version != RECORDING_FORMAT_VERSION:
        raise FormatVersionError(f"unknown recording format version {version}")
    (idlen,) = struct.unpack("<H", need(2, "id length"))
    rid = need(idlen, "recording id").decode("utf-8")
    n_channels, rate, n_samples = struct.unpack("<IdQ", need(20, "channel header"))
    labels = []
    for _ in range(n_channels):
        (lablen,) = struct.unpack("<H", need(2, "label length"))
        labels.append(need(lablen, "label").decode("utf-8"))
    channels = []
    for lab in labels:
        raw = f.read(n_samples * 4)
        if len(raw) != n_samples * 4:
            raise DataError(f"truncated sample data for channel {lab}")
        samples = np.frombuffer(raw, dtype="<f4").astype(np.float64)
        channels.append(ChannelSignal(label=lab, samples=samples, sample_rate_hz=rate))
    return Recording(id=rid, channels=channels)
