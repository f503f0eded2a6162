import numpy as np
import pytest

from somn.errors import DataError
from somn.hypnogram import Hypnogram
from somn.report import confidence_extras, confidence_of, sleep_stats


def test_all_wake():
    h = Hypnogram.from_symbols(["W"] * 100)
    r = sleep_stats(h)
    assert r.sleep_efficiency == 0.0
    assert r.total_recording_min == pytest.approx(50.0)
    assert r.no_sleep
    assert r.fragmentation_index == 0.0


def test_efficiency_formula():
    symbols = ["N1"] * 20 + ["N2"] * 30 + ["N3"] * 20 + ["R"] * 10 + ["W"] * 20
    r = sleep_stats(Hypnogram.from_symbols(symbols))
    assert r.sleep_efficiency == pytest.approx(0.8)
    assert r.total_sleep_min == pytest.approx(40.0)
    assert sum(r.minutes_per_stage.values()) == pytest.approx(r.total_recording_min, abs=1e-9)


def test_fragmentation_hand_count():
    symbols = ["N2"] * 118 + ["W"] + ["N2"]
    r = sleep_stats(Hypnogram.from_symbols(symbols))
    sleep_hours = 119 * 0.5 / 60
    assert r.fragmentation_index == pytest.approx(1.0 / sleep_hours)
    assert r.fragmentation_index == pytest.approx(1.008, abs=1e-3)


def test_fragmentation_counts_sleep_to_n1():
    # N2 -> N1 counts; N1 -> N1 does not; W -> N1 does not
    symbols = ["W", "N1", "N1", "N2", "N1", "N2", "W"]
    r = sleep_stats(Hypnogram.from_symbols(symbols))
    # events: N2->N1 at index 3->4, N2->W at 5->6
    sleep_hours = 5 * 0.5 / 60
    assert r.fragmentation_index == pytest.approx(2.0 / sleep_hours)


def test_empty_hypnogram_error():
    with pytest.raises(DataError):
        sleep_stats(Hypnogram(np.array([], dtype=int)))


def test_efficiency_permutation_invariant_fragmentation_not():
    rng = np.random.default_rng(0)
    stages = rng.integers(0, 5, 200)
    a = sleep_stats(Hypnogram(stages))
    perm = rng.permutation(200)
    b = sleep_stats(Hypnogram(stages[perm]))
    assert a.sleep_efficiency == pytest.approx(b.sleep_efficiency)
    assert a.minutes_per_stage == b.minutes_per_stage


def test_split_and_sum_minutes():
    rng = np.random.default_rng(1)
    stages = rng.integers(0, 5, 120)
    whole = sleep_stats(Hypnogram(stages))
    part1 = sleep_stats(Hypnogram(stages[:50]))
    part2 = sleep_stats(Hypnogram(stages[50:]))
    for s in whole.minutes_per_stage:
        assert whole.minutes_per_stage[s] == pytest.approx(
            part1.minutes_per_stage[s] + part2.minutes_per_stage[s])


def test_confidence_examples():
    probs = np.array([
        [0.2, 0.2, 0.2, 0.2, 0.2],
        [0.0, 1.0, 0.0, 0.0, 0.0],
        [0.5, 0.2, 0.1, 0.1, 0.1],
    ])
    c = confidence_of(probs)
    assert c[0] == pytest.approx(0.2)
    assert c[1] == pytest.approx(1.0)
    assert c[2] == pytest.approx(0.5)
    assert ((c >= 0.2 - 1e-12) & (c <= 1.0)).all()


def test_confidence_extras():
    probs = np.array([[0.5, 0.3, 0.1, 0.05, 0.05]])
    extras = confidence_extras(probs)
    assert extras["margin"][0] == pytest.approx(0.2)
    assert 0.0 < extras["normalized_entropy"][0] < 1.0
    one_hot = np.array([[1.0, 0.0, 0.0, 0.0, 0.0]])
    assert confidence_extras(one_hot)["normalized_entropy"][0] == pytest.approx(0.0)
