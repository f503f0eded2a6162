import numpy as np
import pytest

from somn.errors import DataError, MontageError
from somn.hypnogram import Hypnogram, read_sidecar, write_sidecar
from somn.recording import (ChannelSignal, Montage, Recording, derive_montage,
                            epoch_count, epoch_slice, read_recording,
                            resample_channel, write_recording)

from conftest import canonical_recording, make_recording

ELECTRODE_SET = ("F3", "F4", "C3", "C4", "O1", "O2", "M1", "M2")


def electrode_recording(values_fn, n=6000, rate=200.0):
    return make_recording({lab: values_fn(lab, n) for lab in ELECTRODE_SET}, rate=rate)


def test_identical_electrode_and_mastoid_gives_zero():
    rec = electrode_recording(lambda lab, n: np.ones(n) * 7.0)
    out = derive_montage(rec)
    assert out.channel_labels() == list(Montage().derived_channel_names)
    for c in out.channels:
        assert np.all(c.samples == 0.0)


def test_constant_difference():
    def fn(lab, n):
        if lab == "F3":
            return np.full(n, 5.0)
        if lab == "M2":
            return np.full(n, 2.0)
        return np.zeros(n)
    out = derive_montage(electrode_recording(fn))
    f3m2 = out.channels[0]
    assert f3m2.label == "F3-M2"
    assert np.allclose(f3m2.samples, 3.0)


def test_missing_electrode_named():
    rec = make_recording({lab: np.zeros(600) for lab in ELECTRODE_SET if lab != "O2"})
    with pytest.raises(MontageError, match="missing electrode O2"):
        derive_montage(rec)


def test_montage_linearity():
    rng = np.random.default_rng(0)
    base = {lab: rng.normal(size=1200) for lab in ELECTRODE_SET}
    out1 = derive_montage(make_recording(base))
    out3 = derive_montage(make_recording({k: 3.0 * v for k, v in base.items()}))
    for c1, c3 in zip(out1.channels, out3.channels):
        assert np.allclose(c3.samples, 3.0 * c1.samples, rtol=1e-12)


def test_derived_labels_pass_through():
    rec = canonical_recording(n_epochs=1, seed=4)
    out = derive_montage(rec)
    for cin, cout in zip(rec.channels, out.channels):
        assert np.array_equal(cin.samples, cout.samples)


def test_resampling_to_200hz():
    rec = electrode_recording(lambda lab, n: np.arange(n, dtype=float), n=3000, rate=100.0)
    out = derive_montage(rec)
    assert out.sample_rate_hz == 200.0
    assert out.n_samples == 6000


def test_resample_linear_interp():
    c = ChannelSignal(label="x", samples=np.array([0.0, 1.0, 2.0, 3.0]), sample_rate_hz=1.0)
    r = resample_channel(c, 2.0)
    assert len(r.samples) == 8
    assert r.samples[1] == pytest.approx(0.5)


@pytest.mark.parametrize("n_samples,expected", [(6_000_000, 1000), (6500, 1), (0, 0)])
def test_epoch_count(n_samples, expected):
    rec = make_recording({"F3-M2": np.zeros(n_samples)})
    assert epoch_count(rec) == expected


def test_epoch_count_bounds_property():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(0, 100_000))
        rec = make_recording({"F3-M2": np.zeros(n)})
        k = epoch_count(rec)
        assert k * 6000 <= n < (k + 1) * 6000


def test_epoch_slice_matches_samples():
    rec = canonical_recording(n_epochs=2, seed=9)
    sl = epoch_slice(rec, 1)
    assert sl.shape == (6000, 6)
    assert np.array_equal(sl[:, 0], rec.channels[0].samples[6000:12000])
    with pytest.raises(DataError):
        epoch_slice(rec, 2)


def test_mixed_lengths_rejected():
    rec = make_recording({"a": np.zeros(10), "b": np.zeros(20)})
    with pytest.raises(DataError, match="mixed lengths"):
        rec.n_samples


def test_internal_container_roundtrip(tmp_path):
    rec = canonical_recording(n_epochs=1, seed=7)
    # float32 storage: write values that are float32-exact
    for c in rec.channels:
        c.samples = c.samples.astype(np.float32).astype(np.float64)
    path = tmp_path / "r.somn"
    write_recording(path, rec)
    back = read_recording(path)
    assert back.id == rec.id
    assert back.channel_labels() == rec.channel_labels()
    assert back.sample_rate_hz == 200.0
    for c1, c2 in zip(rec.channels, back.channels):
        assert np.array_equal(c1.samples, c2.samples)


def test_container_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.somn"
    p.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(DataError, match="magic"):
        read_recording(p)


def test_sidecar_roundtrip(tmp_path):
    h = Hypnogram.from_symbols(["W", "N1", "N2", "N3", "R", "N2"])
    p = tmp_path / "h.hypno"
    write_sidecar(p, h)
    back = read_sidecar(p)
    assert back.symbols() == h.symbols()


def test_sidecar_rejects_unknown_symbol(tmp_path):
    p = tmp_path / "h.hypno"
    p.write_text("W\nN9\n", encoding="utf-8")
    with pytest.raises(DataError, match="N9"):
        read_sidecar(p)


def test_montage_validation():
    with pytest.raises(MontageError):
        Montage(derived_channel_names=("F3-M2",))
