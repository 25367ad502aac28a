"""Tests for the (epsilon, theta) grid tuner."""

import numpy as np
import pytest

from flexbid.bidding import PriceCurve
from flexbid.scenarios import SampleSet, hourly_minima
from flexbid.tuner import (
    DEFAULT_EPSILON_GRID,
    DEFAULT_THETA_GRID,
    AggregatorSpec,
    GridSearchResult,
    TunerError,
    grid_search,
    tso_objective,
)
from test_evaluation import make_schedule


def sample_set_from_profiles(profiles):
    profiles = np.asarray(profiles, dtype=float)
    return SampleSet(
        profiles=profiles,
        hourly_minima=np.stack([hourly_minima(p) for p in profiles]),
        source_days=np.arange(profiles.shape[0]),
    )


def random_samples(rng, count=6, low=2.0, high=12.0):
    return sample_set_from_profiles(rng.uniform(low, high, (count, 1440)))


def constant_samples(level, count=4):
    return sample_set_from_profiles(np.full((count, 1440), float(level)))


def aggregator(samples, identifier="a1", **kwargs):
    return AggregatorSpec(
        identifier=identifier, samples=samples, prices=PriceCurve.flat(), **kwargs
    )


# -- tso_objective -----------------------------------------------------------


def test_zero_bids_score_zero():
    samples = constant_samples(5.0)
    assert tso_objective(make_schedule(np.zeros(24)), samples) == 0.0


def test_exact_bid_on_constant_samples_scores_capacity():
    samples = constant_samples(7.0)
    schedule = make_schedule(np.full(24, 7.0))
    assert tso_objective(schedule, samples) == pytest.approx(24 * 7.0)


def test_objective_matches_double_loop():
    rng = np.random.default_rng(31)
    sets = [random_samples(rng, count=3), random_samples(rng, count=4)]
    schedules = [
        make_schedule(rng.uniform(0.0, 12.0, 24)),
        make_schedule(rng.uniform(0.0, 12.0, 24)),
    ]
    want = 0.0
    for schedule, samples in zip(schedules, sets):
        want += schedule.bids.sum()
        for i in range(samples.n_samples):
            acc = 0.0
            for h in range(24):
                for m in range(60):
                    acc += max(schedule.bids[h] - samples.profiles[i, 60 * h + m], 0.0)
            want -= acc / samples.n_samples
    assert tso_objective(schedules, sets) == pytest.approx(want, abs=1e-9)


def test_objective_rejects_misaligned_inputs():
    samples = constant_samples(5.0)
    with pytest.raises(TunerError):
        tso_objective([make_schedule(np.zeros(24))], [samples, samples])


# -- aggregator spec ---------------------------------------------------------


def test_aggregator_validation():
    samples = constant_samples(5.0)
    with pytest.raises(TunerError):
        AggregatorSpec(identifier="", samples=samples, prices=PriceCurve.flat())
    with pytest.raises(TunerError):
        aggregator(samples, bid_lower=6.0, bid_upper=5.0)


def test_aggregator_default_upper_is_best_sample_floor():
    samples = constant_samples(9.0)
    assert aggregator(samples).resolved_upper() == 9.0


# -- grid_search -------------------------------------------------------------


def test_default_grids():
    assert len(DEFAULT_EPSILON_GRID) == 30
    assert DEFAULT_EPSILON_GRID[0] == 0.01
    assert DEFAULT_EPSILON_GRID[-1] == 0.30
    assert DEFAULT_THETA_GRID == (0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35)


def test_single_cell_grid():
    # Identical constant samples force the closed-form bid P - theta/eps.
    result = grid_search(
        aggregator(constant_samples(10.0)), epsilon_grid=[0.1], theta_grid=[0.5]
    )
    assert result.objective_surface.shape == (1, 1)
    assert result.status[0, 0] == "optimal"
    assert result.best_cell == (0, 0)
    assert result.best_epsilon == 0.1
    assert result.best_theta == 0.5
    # Bid 5 kW against a 10 kW floor: no shortfall, objective = capacity.
    assert result.best_objective == pytest.approx(24 * 5.0, abs=1e-6)
    assert result.capacity_surface[0, 0] == pytest.approx(120.0, abs=1e-6)
    assert result.penalty_surface[0, 0] == pytest.approx(0.0, abs=1e-9)


def test_all_infeasible_grid():
    # theta/epsilon far above every sample floor leaves no feasible cell.
    result = grid_search(
        aggregator(constant_samples(4.0)), epsilon_grid=[0.1], theta_grid=[5.0, 8.0]
    )
    assert list(result.status[0]) == ["infeasible", "infeasible"]
    assert np.all(np.isneginf(result.objective_surface))
    assert result.best_cell is None
    assert result.best_epsilon is None
    assert result.argmax_json_dict()["status"] == "all_infeasible"


def test_mixed_grid_skips_infeasible_cells():
    result = grid_search(
        aggregator(constant_samples(10.0)), epsilon_grid=[0.1], theta_grid=[0.2, 5.0]
    )
    assert result.status[0, 0] == "optimal"
    assert result.status[0, 1] == "infeasible"
    assert result.best_cell == (0, 0)
    assert np.isneginf(result.objective_surface[0, 1])
    assert np.isnan(result.capacity_surface[0, 1])


def test_tie_breaks_toward_smaller_epsilon_then_theta():
    # A tight bid cap saturates every cell at the same schedule.
    samples = constant_samples(10.0)
    spec = aggregator(samples, bid_upper=2.0)
    result = grid_search(spec, epsilon_grid=[0.2, 0.1], theta_grid=[0.2, 0.1])
    finite = result.objective_surface[np.isfinite(result.objective_surface)]
    assert np.all(finite == finite[0])
    assert result.best_epsilon == 0.1
    assert result.best_theta == 0.1


def test_surface_matches_objective_recomputation():
    rng = np.random.default_rng(33)
    spec = aggregator(random_samples(rng, count=6))
    result = grid_search(spec, epsilon_grid=[0.2, 0.3], theta_grid=[0.1, 0.3])
    for i in range(2):
        for j in range(2):
            if result.status[i, j] != "optimal":
                continue
            want = tso_objective(result.schedules[i][j], [spec.samples])
            assert result.objective_surface[i, j] == pytest.approx(want, abs=1e-9)
            assert result.capacity_surface[i, j] - result.penalty_surface[
                i, j
            ] == pytest.approx(result.objective_surface[i, j], abs=1e-9)


def test_capacity_non_decreasing_in_epsilon():
    rng = np.random.default_rng(34)
    spec = aggregator(random_samples(rng, count=8, low=3.0, high=14.0))
    result = grid_search(
        spec, epsilon_grid=[0.10, 0.15, 0.20, 0.25, 0.30], theta_grid=[0.1]
    )
    caps = result.capacity_surface[:, 0]
    assert np.all(np.isfinite(caps))
    assert np.all(np.diff(caps) >= -1e-6)


def test_parallel_matches_serial():
    rng = np.random.default_rng(35)
    spec = aggregator(random_samples(rng, count=5))
    serial = grid_search(spec, epsilon_grid=[0.2, 0.3], theta_grid=[0.1, 0.2])
    parallel = grid_search(
        spec, epsilon_grid=[0.2, 0.3], theta_grid=[0.1, 0.2], jobs=2
    )
    assert np.array_equal(serial.objective_surface, parallel.objective_surface)
    assert np.array_equal(serial.capacity_surface, parallel.capacity_surface)
    assert np.array_equal(serial.status, parallel.status)
    assert serial.best_cell == parallel.best_cell


def test_score_samples_flag():
    rng = np.random.default_rng(36)
    fit = random_samples(rng, count=5)
    held_out = random_samples(rng, count=7)
    spec = aggregator(fit)
    result = grid_search(
        spec, epsilon_grid=[0.25], theta_grid=[0.1], score_samples=[held_out]
    )
    schedules = result.schedules[0][0]
    want = tso_objective(schedules, [held_out])
    assert result.objective_surface[0, 0] == pytest.approx(want, abs=1e-9)
    # The bids themselves still come from the fit set.
    fit_only = grid_search(spec, epsilon_grid=[0.25], theta_grid=[0.1])
    assert np.allclose(schedules[0].bids, fit_only.schedules[0][0][0].bids)


def test_grid_validation():
    spec = aggregator(constant_samples(5.0))
    with pytest.raises(TunerError):
        grid_search(spec, epsilon_grid=[], theta_grid=[0.1])
    with pytest.raises(TunerError):
        grid_search(spec, epsilon_grid=[0.0], theta_grid=[0.1])
    with pytest.raises(TunerError):
        grid_search(spec, epsilon_grid=[0.1], theta_grid=[-0.5])
    with pytest.raises(TunerError):
        grid_search(spec, epsilon_grid=[0.1], theta_grid=[0.1], jobs=0)
    with pytest.raises(TunerError):
        grid_search([], epsilon_grid=[0.1], theta_grid=[0.1])


# -- persistence -------------------------------------------------------------


def test_surface_csv(tmp_path):
    result = grid_search(
        aggregator(constant_samples(10.0)), epsilon_grid=[0.1], theta_grid=[0.2, 5.0]
    )
    path = tmp_path / "surface.csv"
    result.write_surface_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epsilon,theta,objective_kw,total_capacity_kw,mean_penalty_kw,status"
    assert len(lines) == 3
    assert lines[1].startswith("0.1,0.2,")
    assert lines[1].endswith(",optimal")
    assert lines[2] == "0.1,5,-inf,nan,nan,infeasible"
    text = path.read_bytes()
    result.write_surface_csv(path)
    assert path.read_bytes() == text


def test_argmax_json(tmp_path):
    result = grid_search(
        aggregator(constant_samples(10.0)), epsilon_grid=[0.1], theta_grid=[0.5]
    )
    path = tmp_path / "best.json"
    result.save_argmax_json(path)
    import json

    with open(path) as fh:
        payload = json.load(fh)
    assert payload["status"] == "optimal"
    assert payload["epsilon"] == 0.1
    assert payload["theta"] == 0.5
    assert payload["objective_kw"] == pytest.approx(120.0, abs=1e-6)
