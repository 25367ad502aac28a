"""Tests for the EV fleet baseline simulator."""

import numpy as np
import pytest

from flexbid.fleet import (
    MINUTES_PER_DAY,
    BaselineSeries,
    FleetConfig,
    FleetConfigError,
    day_slice,
    read_baseline_csv,
    simulate_fleet,
    weekend_labels,
    write_baseline_csv,
)


def small_config(**overrides):
    base = dict(n_vehicles=6, n_days=10, rng_seed=5)
    base.update(overrides)
    return FleetConfig(**base)


# -- config ------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(FleetConfigError):
        FleetConfig(n_vehicles=-1)
    with pytest.raises(FleetConfigError):
        FleetConfig(n_days=0)
    with pytest.raises(FleetConfigError):
        FleetConfig(charger_power=-2.0)
    with pytest.raises(FleetConfigError):
        FleetConfig(weekday_session_rate=-0.1)
    with pytest.raises(FleetConfigError):
        FleetConfig(evening_weight=1.5)
    with pytest.raises(FleetConfigError):
        FleetConfig(drift_coefficient=float("nan"))


def test_config_json_round_trip(tmp_path):
    cfg = small_config(charger_power=7.4, evening_weight=0.3)
    path = tmp_path / "fleet.json"
    cfg.save_json(path)
    assert FleetConfig.load_json(path) == cfg
    # Serialized twice, byte identical.
    text = path.read_bytes()
    cfg.save_json(path)
    assert path.read_bytes() == text


# -- simulation --------------------------------------------------------------


def test_empty_portfolio_is_all_zero():
    series = simulate_fleet(FleetConfig(n_vehicles=0, n_days=4, rng_seed=1))
    assert series.values.shape == (4, MINUTES_PER_DAY)
    assert not series.values.any()


def test_default_scenario_shape_and_bounds():
    cfg = FleetConfig(rng_seed=2)
    series = simulate_fleet(cfg)
    assert series.values.shape == (90, MINUTES_PER_DAY)
    assert series.values.min() >= 0.0
    assert series.values.max() <= cfg.n_vehicles * cfg.charger_power


def test_values_are_multiples_of_charger_power():
    cfg = small_config(charger_power=3.7)
    series = simulate_fleet(cfg)
    counts = series.values / cfg.charger_power
    assert np.allclose(counts, np.round(counts))


def test_reproducible_and_seed_sensitive():
    cfg = small_config()
    a = simulate_fleet(cfg)
    b = simulate_fleet(cfg)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.day_labels, b.day_labels)
    c = simulate_fleet(small_config(rng_seed=6))
    assert not np.array_equal(a.values, c.values)


def test_weekend_labels_weekly_pattern():
    labels = weekend_labels(14)
    assert list(np.flatnonzero(labels)) == [5, 6, 12, 13]


def test_drift_raises_late_period_consumption():
    # Spec-level check: with positive drift the later 30-day window beats
    # the earlier one on average across seeds.
    diffs = []
    for seed in range(1, 21):
        series = simulate_fleet(FleetConfig(rng_seed=seed))
        daily = series.values.mean(axis=1)
        diffs.append(daily[61:91].mean() - daily[2:32].mean())
    assert np.mean(diffs) > 0.0
    # The effect dominates noise seed by seed as well.
    assert sum(d > 0 for d in diffs) >= 18


def test_weekends_run_hotter_than_weekdays():
    gaps = []
    for seed in range(1, 11):
        series = simulate_fleet(FleetConfig(rng_seed=seed, drift_coefficient=0.0))
        daily = series.values.mean(axis=1)
        gaps.append(daily[series.day_labels].mean() - daily[~series.day_labels].mean())
    assert np.mean(gaps) > 0.0


# -- day_slice ---------------------------------------------------------------


def test_day_slice_matches_row():
    series = simulate_fleet(small_config())
    assert np.array_equal(day_slice(series, 5), series.values[5])


def test_day_slice_bounds():
    series = simulate_fleet(small_config(n_days=3))
    with pytest.raises(IndexError):
        day_slice(series, 3)
    with pytest.raises(IndexError):
        day_slice(series, -1)


def test_single_day_slice_is_whole_series():
    series = simulate_fleet(small_config(n_days=1))
    assert np.array_equal(day_slice(series, 0), series.values[0])


# -- CSV ---------------------------------------------------------------------


def test_csv_round_trip(tmp_path):
    series = simulate_fleet(small_config(n_days=3))
    path = tmp_path / "baseline.csv"
    write_baseline_csv(series, path)
    with open(path) as fh:
        assert fh.readline() == "day,minute,kw\n"
    back = read_baseline_csv(path)
    # Ten significant digits survive the text format.
    assert np.allclose(back.values, series.values, rtol=1e-9, atol=0.0)
    assert np.array_equal(back.day_labels, series.day_labels)
    # A second pass through the format is lossless, so files stabilize.
    again = tmp_path / "again.csv"
    write_baseline_csv(back, again)
    assert again.read_bytes() == path.read_bytes()


def test_csv_bytes_deterministic(tmp_path):
    series = simulate_fleet(small_config(n_days=2))
    first = tmp_path / "a.csv"
    second = tmp_path / "b.csv"
    write_baseline_csv(series, first)
    write_baseline_csv(series, second)
    assert first.read_bytes() == second.read_bytes()


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("day,minute,kilowatt\n0,0,1.0\n")
    with pytest.raises(FleetConfigError):
        read_baseline_csv(path)


def test_csv_rejects_missing_rows(tmp_path):
    series = simulate_fleet(small_config(n_days=2))
    path = tmp_path / "cut.csv"
    write_baseline_csv(series, path)
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[:-10]))
    with pytest.raises(FleetConfigError):
        read_baseline_csv(path)


def test_series_type_validation():
    with pytest.raises(FleetConfigError):
        BaselineSeries(values=np.zeros((2, 100)), day_labels=np.zeros(2, dtype=bool))
    with pytest.raises(FleetConfigError):
        BaselineSeries(
            values=np.zeros((2, MINUTES_PER_DAY)), day_labels=np.zeros(3, dtype=bool)
        )
    with pytest.raises(FleetConfigError):
        BaselineSeries(
            values=np.full((1, MINUTES_PER_DAY), -1.0),
            day_labels=np.zeros(1, dtype=bool),
        )
