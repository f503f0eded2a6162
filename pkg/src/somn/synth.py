"""Synthetic PSG generator with known hypnograms.

Stages get distinguishable band-power signatures: each epoch is a sum of
independent band-passed white-noise components (plus a broadband floor)
whose relative powers follow the stage's weights; N2 epochs additionally
carry short sigma-band spindle bursts. Stage sequences follow a
first-order Markov chain. Everything is deterministic per seed using the
numpy PCG64 generator (algorithm id recorded in fixture manifests).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParameterError
from .hypnogram import N_STAGES, STAGE_INDEX, STAGES, Hypnogram
from .recording import CANONICAL_RATE_HZ, ChannelSignal, Montage, Recording

PRNG_ALGORITHM = "numpy-pcg64"
SAMPLES_PER_EPOCH = 6000
WEIGHT_TOL = 1e-9
CLIP_SIGMAS = 8.0

# Band edges (Hz) used for synthesis; "broadband" is the wide floor.
GEN_BANDS = {
    "delta": (0.5, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 12.0),
    "sigma": (12.0, 20.0),
    "broadband": (0.5, 45.0),
}


@dataclass(frozen=True)
class StageSignature:
    """Relative band powers and amplitude for one stage's colored noise."""

    stage: str
    band_weights: dict
    amplitude_uv: float
    spindle_burst: bool = False

    def __post_init__(self):
        if self.stage not in STAGE_INDEX:
            raise DataError(f"unknown stage symbol {self.stage!r}")
        unknown = set(self.band_weights) - set(GEN_BANDS)
        if unknown:
            raise ParameterError(f"unknown bands in signature: {sorted(unknown)}")
        total = sum(self.band_weights.values())
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ParameterError(f"band weights for {self.stage} sum to {total}, expected 1")
        if any(w < 0 for w in self.band_weights.values()):
            raise ParameterError(f"negative band weight for {self.stage}")
        if self.amplitude_uv < 0:
            raise ParameterError("amplitude must be nonnegative")


@dataclass(frozen=True)
class TransitionModel:
    """Row-stochastic 5x5 stage transition matrix plus initial distribution."""

    matrix: np.ndarray
    initial: np.ndarray
    stages: tuple = STAGES

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=np.float64))
        object.__setattr__(self, "initial", np.asarray(self.initial, dtype=np.float64))
        if self.matrix.shape != (N_STAGES, N_STAGES):
            raise ParameterError(f"transition matrix must be 5x5, got {self.matrix.shape}")
        if (self.matrix < 0).any() or (self.initial < 0).any():
            raise ParameterError("transition probabilities must be nonnegative")
        rows = self.matrix.sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > WEIGHT_TOL)
        if bad.size:
            raise ParameterError(
                f"transition row {STAGES[bad[0]]} sums to {rows[bad[0]]}, expected 1")
        if abs(self.initial.sum() - 1.0) > WEIGHT_TOL:
            raise ParameterError(f"initial distribution sums to {self.initial.sum()}")

    def stationary(self, iterations: int = 10000, tol: float = 1e-13) -> np.ndarray:
        """Stationary distribution by power iteration on the transpose."""
        p = np.full(N_STAGES, 1.0 / N_STAGES)
        for _ in range(iterations):
            nxt = p @ self.matrix
            if np.abs(nxt - p).max() < tol:
                return nxt
            p = nxt
        return p


_DEFAULT_MATRIX = np.array([
    # W     N1     N2     N3     R
    [0.930, 0.050, 0.004, 0.000, 0.016],  # W
    [0.045, 0.850, 0.085, 0.000, 0.020],  # N1
    [0.015, 0.015, 0.920, 0.033, 0.017],  # N2
    [0.008, 0.004, 0.058, 0.930, 0.000],  # N3
    [0.022, 0.010, 0.018, 0.000, 0.950],  # R
])


def default_transition_model() -> TransitionModel:
    """Self-transitions 0.85-0.95 give realistic bouts; starts at the stationary mix."""
    tm = TransitionModel(matrix=_DEFAULT_MATRIX, initial=np.full(N_STAGES, 0.2))
    return TransitionModel(matrix=_DEFAULT_MATRIX, initial=tm.stationary())


def default_signatures() -> dict:
    """Band-weight presets per stage.

    N1 and R are deliberately close in spectral shape (both theta-leaning)
    so that single-epoch classifiers confuse them and temporal context
    pays off; W is alpha/broadband, N2 adds sigma and spindles, N3 is
    delta-dominant.
    """
    sig = {
        "W": StageSignature("W", {"delta": 0.10, "theta": 0.14, "alpha": 0.26,
                                  "sigma": 0.10, "broadband": 0.40}, amplitude_uv=30.0),
        "N1": StageSignature("N1", {"delta": 0.17, "theta": 0.35, "alpha": 0.16,
                                    "sigma": 0.08, "broadband": 0.24}, amplitude_uv=40.0),
        "N2": StageSignature("N2", {"delta": 0.26, "theta": 0.26, "alpha": 0.08,
                                    "sigma": 0.20, "broadband": 0.20}, amplitude_uv=50.0,
                             spindle_burst=True),
        "N3": StageSignature("N3", {"delta": 0.48, "theta": 0.18, "alpha": 0.06,
                                    "sigma": 0.06, "broadband": 0.22}, amplitude_uv=65.0),
        "R": StageSignature("R", {"delta": 0.17, "theta": 0.35, "alpha": 0.16,
                                  "sigma": 0.08, "broadband": 0.24}, amplitude_uv=40.0),
    }
    return sig


def gen_hypnogram(seed: int, n_epochs: int, tm: TransitionModel | None = None) -> Hypnogram:
    """Sample a first-order Markov stage sequence, deterministic per seed."""
    if n_epochs < 1:
        raise ParameterError(f"n_epochs must be >= 1, got {n_epochs}")
    tm = tm or default_transition_model()
    rng = np.random.Generator(np.random.PCG64(seed))
    stages = np.empty(n_epochs, dtype=np.int64)
    stages[0] = rng.choice(N_STAGES, p=tm.initial)
    for t in range(1, n_epochs):
        stages[t] = rng.choice(N_STAGES, p=tm.matrix[stages[t - 1]])
    return Hypnogram(stages)


def _band_noise(rng: np.random.Generator, n: int, lo_hz: float, hi_hz: float) -> np.ndarray:
    """Unit-RMS band-passed white noise via an FFT brick-wall mask."""
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    f = np.fft.rfftfreq(n, d=1.0 / CANONICAL_RATE_HZ)
    spec[(f < lo_hz) | (f >= hi_hz)] = 0.0
    x = np.fft.irfft(spec, n=n)
    rms = x.std()
    return x / rms if rms > 0 else x


def _spindle(rng: np.random.Generator, n: int) -> np.ndarray:
    """One 0.5-1.5 s sigma-band burst with a Hann envelope, random placement."""
    dur_s = rng.uniform(0.5, 1.5)
    width = int(dur_s * CANONICAL_RATE_HZ)
    start = rng.integers(0, n - width)
    freq = rng.uniform(12.5, 15.0)
    t = np.arange(width) / CANONICAL_RATE_HZ
    phase = rng.uniform(0, 2 * np.pi)
    envelope = 0.5 * (1 - np.cos(2 * np.pi * np.arange(width) / width))
    burst = np.zeros(n)
    burst[start:start + width] = np.sin(2 * np.pi * freq * t + phase) * envelope
    return burst


# Observation noise: per-band log-multipliers and the amplitude wobble per
# epoch (optionally with AR(1) memory via jitter_rho), so single-epoch
# spectra are ambiguous between nearby stages while bout-level context
# stays informative. Tuned so a per-epoch linear classifier clears 0.6
# accuracy but a sequence model beats it.
BAND_JITTER_SIGMA = 0.55
AMP_JITTER_SIGMA = 0.25
JITTER_RHO = 0.0


def gen_recording(h: Hypnogram, seed: int, sig: dict | None = None,
                  montage: Montage | None = None, rec_id: str | None = None,
                  band_jitter: float = BAND_JITTER_SIGMA,
                  amp_jitter: float = AMP_JITTER_SIGMA,
                  jitter_rho: float = JITTER_RHO) -> Recording:
    """Six-channel 200 Hz colored-noise recording realizing a hypnogram.

    Each epoch of each channel is an independent draw; per-band components
    are scaled so band powers follow the stage's (jittered) weights, and
    the whole epoch is scaled to the stage amplitude. Samples never exceed
    8 x the nominal amplitude. Bit-identical for identical (h, seed, sig).
    """
    if len(h) == 0:
        raise DataError("hypnogram is empty")
    sig = sig or default_signatures()
    for s in STAGES:
        if s not in sig:
            raise DataError(f"missing stage signature for {s!r}")
    montage = montage or Montage()
    rng = np.random.Generator(np.random.PCG64(seed))

    n_epochs = len(h)
    n = SAMPLES_PER_EPOCH
    channels = np.zeros((6, n_epochs * n))
    band_names = list(GEN_BANDS)
    innov = np.sqrt(1.0 - jitter_rho**2)
    z_band = rng.normal(0.0, band_jitter, size=len(band_names))
    z_amp = rng.normal(0.0, amp_jitter)
    for t, stage_idx in enumerate(h.stages):
        s = sig[STAGES[stage_idx]]
        if t > 0:
            z_band = jitter_rho * z_band + innov * rng.normal(0.0, band_jitter, len(band_names))
            z_amp = jitter_rho * z_amp + innov * rng.normal(0.0, amp_jitter)
        weights = np.array([s.band_weights.get(b, 0.0) for b in band_names]) * np.exp(z_band)
        total = weights.sum()
        if total > 0:
            weights /= total
        amp = s.amplitude_uv * np.exp(z_amp)
        for c in range(6):
            x = np.zeros(n)
            for b, w in zip(band_names, weights):
                if w == 0:
                    continue
                lo, hi = GEN_BANDS[b]
                x += np.sqrt(w) * _band_noise(rng, n, lo, hi)
            if s.spindle_burst:
                x += 1.5 * _spindle(rng, n)
            x *= amp
            np.clip(x, -CLIP_SIGMAS * s.amplitude_uv, CLIP_SIGMAS * s.amplitude_uv, out=x)
            channels[c, t * n:(t + 1) * n] = x

    chans = [ChannelSignal(label=name, samples=channels[i], sample_rate_hz=CANONICAL_RATE_HZ)
             for i, name in enumerate(montage.derived_channel_names)]
    return Recording(id=rec_id or f"synth-{seed}", channels=chans, expert_hypnogram=h)


def parse_params(text: str) -> tuple[dict, TransitionModel]:
    """Parse a key-value parameter file overriding default signatures/transitions.

    Recognized keys:
      stage.<S>.amplitude_uv = <float>
      stage.<S>.band.<band> = <float>        (bands renormalized per stage)
      stage.<S>.spindle = true|false
      transition.<A>.<B> = <float>           (rows renormalized)
      initial.<S> = <float>                  (renormalized)
    Lines starting with '#' and blank lines are ignored.
    """
    sigs = {s: {"amplitude_uv": v.amplitude_uv,
                "band_weights": dict(v.band_weights),
                "spindle_burst": v.spindle_burst}
            for s, v in default_signatures().items()}
    tm = default_transition_model()
    matrix = tm.matrix.copy()
    initial = tm.initial.copy()

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"parameter line {lineno} has no '='")
        key, value = (part.strip() for part in line.split("=", 1))
        parts = key.split(".")
        try:
            if parts[0] == "stage" and parts[2] == "amplitude_uv":
                sigs[parts[1]]["amplitude_uv"] = float(value)
            elif parts[0] == "stage" and parts[2] == "band":
                sigs[parts[1]]["band_weights"][parts[3]] = float(value)
            elif parts[0] == "stage" and parts[2] == "spindle":
                sigs[parts[1]]["spindle_burst"] = value.lower() == "true"
            elif parts[0] == "transition":
                matrix[STAGE_INDEX[parts[1]], STAGE_INDEX[parts[2]]] = float(value)
            elif parts[0] == "initial":
                initial[STAGE_INDEX[parts[1]]] = float(value)
            else:
                raise KeyError(key)
        except (KeyError, IndexError, ValueError) as e:
            raise DataError(f"bad parameter line {lineno}: {line!r}") from e

    matrix = matrix / matrix.sum(axis=1, keepdims=True)
    initial = initial / initial.sum()
    signatures = {}
    for s, d in sigs.items():
        weights = d["band_weights"]
        total = sum(weights.values())
        if total <= 0:
            raise DataError(f"stage {s}: band weights sum to {total}")
        weights = {b: w / total for b, w in weights.items()}
        signatures[s] = StageSignature(stage=s, band_weights=weights,
                                       amplitude_uv=d["amplitude_uv"],
                                       spindle_burst=d["spindle_burst"])
    return signatures, TransitionModel(matrix=matrix, initial=initial)
