import numpy as np
import pytest

from somn.errors import DataError, ParameterError, ShapeError
from somn.features import (FeatureMatrix, band_bins, expert_features, feature_names,
                           feature_stats, kurtosis, line_length, normalize_features,
                           denormalize_features, p95, read_features, read_features_csv,
                           write_features, write_features_csv)
from somn.spectral import spectrogram_epoch


def pair_grids_of(epoch, bank, montage):
    return spectrogram_epoch(epoch, bank, montage).pairs


def test_line_length_examples():
    assert line_length(np.zeros(6000)) == 0.0
    assert line_length(np.full(100, 3.3)) == 0.0
    assert line_length(np.array([0.0, 1.0, 0.0, 1.0])) == 3.0


def test_line_length_loop_oracle():
    rng = np.random.default_rng(0)
    x = rng.normal(size=6000)
    oracle = sum(abs(x[t] - x[t - 1]) for t in range(1, 6000))
    assert line_length(x) == pytest.approx(oracle, rel=1e-9)


def test_kurtosis_alternating():
    x = np.tile([-1.0, 1.0], 50)
    assert kurtosis(x) == pytest.approx(1.0)


def test_kurtosis_constant_guard():
    assert kurtosis(np.full(10, 2.5)) == 0.0


def test_kurtosis_normal_monte_carlo():
    rng = np.random.default_rng(1)
    assert kurtosis(rng.standard_normal(1_000_000)) == pytest.approx(3.0, abs=0.05)


def test_kurtosis_min_length():
    with pytest.raises(ParameterError):
        kurtosis(np.array([1.0, 2.0, 3.0]))


def test_p95_hand_interpolation():
    series = np.arange(1.0, 30.0)  # 1..29
    assert p95(series) == pytest.approx(27.6)
    assert p95(series) == pytest.approx(np.percentile(series, 95))


def test_p95_constant_and_bound():
    assert p95(np.full(29, 4.2)) == 4.2
    rng = np.random.default_rng(2)
    for _ in range(20):
        s = rng.normal(size=29)
        assert p95(s) <= s.max() + 1e-12
        assert p95(s) == pytest.approx(np.percentile(s, 95))


def test_band_bins_arithmetic():
    # bin k belongs to [lo, hi) by k * 0.390625
    assert band_bins("delta")[0] == 2 and band_bins("delta")[-1] == 10
    assert band_bins("theta")[0] == 11 and band_bins("theta")[-1] == 20
    assert band_bins("alpha")[0] == 21 and band_bins("alpha")[-1] == 30
    assert band_bins("sigma")[0] == 31 and band_bins("sigma")[-1] == 51
    assert band_bins("total")[0] == 0 and band_bins("total")[-1] == 51


def test_feature_names_category_counts():
    names = feature_names()
    assert len(names) == 96
    assert len(set(names)) == 96
    assert sum(1 for n in names if n.startswith("linelen.")) == 6
    assert sum(1 for n in names if n.startswith("kurt.") and not n.startswith("kurt.band.")) == 6
    for fam in ("delta_total", "theta_total", "alpha_total",
                "delta_theta", "theta_alpha", "delta_alpha"):
        assert sum(1 for n in names if n.startswith(f"ratio.{fam}.")) == 12
    for band in ("delta", "theta", "alpha", "sigma"):
        assert sum(1 for n in names if n.startswith(f"kurt.band.{band}.")) == 3


def test_vector_length_96(bank, montage):
    rng = np.random.default_rng(3)
    epoch = rng.normal(size=(6000, 6))
    v = expert_features(epoch, pair_grids_of(epoch, bank, montage))
    assert v.shape == (96,)
    assert np.isfinite(v).all()


def test_pure_2hz_sinusoid_delta_dominant(bank, montage):
    t = np.arange(6000) / 200.0
    epoch = np.tile(np.sin(2 * np.pi * 2.0 * t)[:, None], (1, 6)) * 30.0
    v = expert_features(epoch, pair_grids_of(epoch, bank, montage))
    names = feature_names(montage)
    for pair in ("frontal", "central", "occipital"):
        mean_idx = names.index(f"ratio.delta_total.{pair}.mean")
        assert v[mean_idx] > 0.95


def test_all_zero_epoch_all_zero_features(bank, montage):
    epoch = np.zeros((6000, 6))
    v = expert_features(epoch, pair_grids_of(epoch, bank, montage))
    assert np.array_equal(v, np.zeros(96))


def test_amplitude_covariance(bank, montage):
    rng = np.random.default_rng(4)
    epoch = rng.normal(size=(6000, 6)) * 20
    a = 2.5
    v1 = expert_features(epoch, pair_grids_of(epoch, bank, montage))
    va = expert_features(a * epoch, pair_grids_of(a * epoch, bank, montage))
    names = feature_names(montage)
    for i, name in enumerate(names):
        if name.startswith("linelen."):
            assert va[i] == pytest.approx(a * v1[i], rel=1e-9)
        else:  # kurtosis, ratios, band kurtosis are amplitude-invariant
            assert va[i] == pytest.approx(v1[i], rel=1e-6, abs=1e-9)


def test_extraction_deterministic(bank, montage):
    rng = np.random.default_rng(5)
    epoch = rng.normal(size=(6000, 6))
    grids = pair_grids_of(epoch, bank, montage)
    assert np.array_equal(expert_features(epoch, grids), expert_features(epoch, grids))


def test_shape_and_data_errors(bank, montage):
    with pytest.raises(ShapeError):
        expert_features(np.zeros((5999, 6)), np.zeros((3, 29, 257)))
    with pytest.raises(ShapeError):
        expert_features(np.zeros((6000, 6)), np.zeros((3, 29, 250)))
    bad = np.zeros((3, 29, 257))
    bad[0, 0, 0] = np.nan
    with pytest.raises(DataError, match="non-finite"):
        expert_features(np.zeros((6000, 6)), bad)


def test_normalize_train_stats():
    rng = np.random.default_rng(6)
    values = rng.normal(loc=5.0, scale=3.0, size=(200, 96))
    values[:, 10] = 7.25  # degenerate column
    fm = FeatureMatrix(values=values, names=feature_names())
    stats = feature_stats(values)
    normed = normalize_features(fm, stats)
    means = normed.values.mean(axis=0)
    stds = normed.values.std(axis=0)
    assert np.abs(means).max() < 1e-9
    nondeg = np.arange(96) != 10
    assert np.abs(stds[nondeg] - 1.0).max() < 1e-6
    assert np.all(normed.values[:, 10] == 0.0)  # centered, not scaled


def test_normalize_roundtrip():
    rng = np.random.default_rng(7)
    train = rng.normal(size=(100, 96))
    test = rng.normal(size=(50, 96)) * 2 + 1
    stats = feature_stats(train)
    fm = FeatureMatrix(values=test, names=feature_names())
    back = denormalize_features(normalize_features(fm, stats), stats)
    assert np.abs(back.values - test).max() < 1e-9


def test_normalize_shape_error():
    fm = FeatureMatrix(values=np.zeros((5, 96)), names=feature_names())
    with pytest.raises(ShapeError):
        normalize_features(fm, (np.zeros(95), np.ones(95)))


def test_feature_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(8)
    fm = FeatureMatrix(values=rng.normal(size=(7, 96)), names=feature_names())
    p = tmp_path / "f.csv"
    write_features_csv(p, fm)
    back = read_features_csv(p)
    assert back.names == fm.names
    assert np.allclose(back.values, fm.values, rtol=0, atol=0)


def test_feature_binary_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    values = rng.normal(size=(7, 96)).astype(np.float32).astype(np.float64)
    fm = FeatureMatrix(values=values, names=feature_names())
    p = tmp_path / "f.feat"
    write_features(p, fm)
    back = read_features(p)
    assert back.names == fm.names
    assert np.array_equal(back.values, values)
