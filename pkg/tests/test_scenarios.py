"""Tests for period splitting and bootstrap sampling."""

import json

import numpy as np
import pytest

from flexbid.fleet import MINUTES_PER_DAY, FleetConfig, simulate_fleet
from flexbid.scenarios import (
    PeriodSplit,
    SampleSet,
    ScenarioError,
    bootstrap_samples,
    hourly_minima,
    split_periods,
)


def demo_series(n_days=20, seed=3):
    return simulate_fleet(FleetConfig(n_vehicles=5, n_days=n_days, rng_seed=seed))


# -- split_periods -----------------------------------------------------------


def test_default_split_layout():
    split = split_periods(demo_series(90))
    assert list(split.burn_in_days) == [0]
    assert list(split.in_sample_days) == list(range(1, 15))
    assert list(split.out_of_sample_days) == list(range(15, 90))


def test_split_windows_partition_the_horizon():
    split = split_periods(demo_series(30), burn_in=2, in_sample_len=10)
    all_days = np.concatenate(
        [split.burn_in_days, split.in_sample_days, split.out_of_sample_days]
    )
    assert np.array_equal(np.sort(all_days), np.arange(30))


def test_split_requires_room_for_evaluation():
    series = demo_series(15)
    with pytest.raises(ScenarioError):
        split_periods(series, burn_in=1, in_sample_len=14)
    # One fewer in-sample day leaves a single evaluation day.
    split = split_periods(series, burn_in=1, in_sample_len=13)
    assert list(split.out_of_sample_days) == [14]


def test_split_rejects_bad_parameters():
    series = demo_series(20)
    with pytest.raises(ScenarioError):
        split_periods(series, burn_in=-1)
    with pytest.raises(ScenarioError):
        split_periods(series, in_sample_len=0)


# -- hourly_minima -----------------------------------------------------------


def test_hourly_minima_matches_scan():
    rng = np.random.default_rng(11)
    profile = rng.uniform(0.0, 50.0, MINUTES_PER_DAY)
    minima = hourly_minima(profile)
    assert minima.shape == (24,)
    for hour in range(24):
        assert minima[hour] == profile[60 * hour : 60 * (hour + 1)].min()


def test_hourly_minima_localizes_dip():
    profile = np.full(MINUTES_PER_DAY, 9.0)
    profile[61] = 2.5
    minima = hourly_minima(profile)
    assert minima[1] == 2.5
    assert np.all(minima[np.arange(24) != 1] == 9.0)


def test_hourly_minima_rejects_wrong_length():
    with pytest.raises(ScenarioError):
        hourly_minima(np.zeros(100))


# -- bootstrap_samples -------------------------------------------------------


def test_bootstrap_shapes_and_sources():
    series = demo_series(40)
    split = split_periods(series, burn_in=1, in_sample_len=14)
    samples = bootstrap_samples(series, split, count=30, seed=7)
    assert samples.profiles.shape == (30, MINUTES_PER_DAY)
    assert samples.hourly_minima.shape == (30, 24)
    assert samples.n_samples == 30
    assert np.all(np.isin(samples.source_days, split.in_sample_days))
    for i, day in enumerate(samples.source_days):
        assert np.array_equal(samples.profiles[i], series.values[day])
        assert np.array_equal(
            samples.hourly_minima[i], hourly_minima(series.values[day])
        )


def test_bootstrap_deterministic_per_seed():
    series = demo_series(40)
    split = split_periods(series)
    a = bootstrap_samples(series, split, count=12, seed=4)
    b = bootstrap_samples(series, split, count=12, seed=4)
    assert np.array_equal(a.source_days, b.source_days)
    assert np.array_equal(a.profiles, b.profiles)
    c = bootstrap_samples(series, split, count=12, seed=5)
    assert not np.array_equal(a.source_days, c.source_days)


def test_bootstrap_single_day_window():
    series = demo_series(3)
    split = split_periods(series, burn_in=1, in_sample_len=1)
    samples = bootstrap_samples(series, split, count=4, seed=0)
    assert np.all(samples.source_days == split.in_sample_days[0])
    assert np.all(samples.profiles == series.values[split.in_sample_days[0]])


def test_bootstrap_without_replacement():
    series = demo_series(40)
    split = split_periods(series, burn_in=1, in_sample_len=14)
    samples = bootstrap_samples(series, split, count=14, seed=2, replace=False)
    assert sorted(samples.source_days) == list(split.in_sample_days)
    with pytest.raises(ScenarioError):
        bootstrap_samples(series, split, count=15, seed=2, replace=False)


def test_bootstrap_rejects_bad_count():
    series = demo_series(20)
    split = split_periods(series)
    with pytest.raises(ScenarioError):
        bootstrap_samples(series, split, count=0, seed=1)


# -- SampleSet ---------------------------------------------------------------


def test_sample_set_validation():
    with pytest.raises(ScenarioError):
        SampleSet(
            profiles=np.zeros((3, MINUTES_PER_DAY)),
            hourly_minima=np.zeros((2, 24)),
            source_days=np.zeros(3, dtype=np.int64),
        )
    with pytest.raises(ScenarioError):
        SampleSet(
            profiles=np.zeros((3, 100)),
            hourly_minima=np.zeros((3, 24)),
            source_days=np.zeros(3, dtype=np.int64),
        )


def test_sample_set_json(tmp_path):
    series = demo_series(30)
    split = split_periods(series)
    samples = bootstrap_samples(series, split, count=6, seed=9)
    path = tmp_path / "samples.json"
    samples.save_json(path)
    with open(path) as fh:
        payload = json.load(fh)
    assert payload["source_days"] == list(map(int, samples.source_days))
    assert "profiles_kw" not in payload
    got = np.asarray(payload["hourly_minima_kw"])
    assert np.allclose(got, samples.hourly_minima)
    samples.save_json(path, include_profiles=True)
    with open(path) as fh:
        assert "profiles_kw" in json.load(fh)
