"""Grid tuning of (epsilon, theta) from the system operator's side.

The operator does not observe bids directly; it picks the rule
parameters, lets every aggregator re-optimize under them, and scores
the outcome by reliability: total sold capacity minus the sample-mean
reserve shortfall.  The inner problems are MILPs, so the outer search
is an exhaustive scan over a finite grid.  Cells are independent and
may be solved in parallel; results are merged in grid order so the
outcome never depends on scheduling.

Penalties are scored on the same sample set the bids were fit on,
which is what a regulator auditing submitted documentation can see.
Scoring against a different day set (for research on out-of-sample
behaviour) is supported through `score_samples`.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bidding import (
    BidSchedule,
    InfeasibleBidModel,
    PriceCurve,
    RobustnessParams,
    default_bid_upper,
    optimize_bids,
)
from .scenarios import SampleSet


class TunerError(ValueError):
    """Malformed tuner inputs."""


DEFAULT_EPSILON_GRID = tuple(round(0.01 * k, 2) for k in range(1, 31))
DEFAULT_THETA_GRID = (0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35)

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class AggregatorSpec:
    """One aggregator's fixed data: samples, prices, and bid box."""

    identifier: str
    samples: SampleSet
    prices: PriceCurve
    bid_lower: float = 0.0
    bid_upper: float | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.identifier, str) or not self.identifier:
            raise TunerError("aggregator identifier must be a non-empty string")
        if not isinstance(self.samples, SampleSet):
            raise TunerError("samples must be a SampleSet")
        upper = self.resolved_upper()
        if not np.isfinite(upper) or self.bid_lower > upper:
            raise TunerError(
                f"bid box [{self.bid_lower}, {upper}] of {self.identifier!r} is empty"
            )

    def resolved_upper(self) -> float:
        if self.bid_upper is not None:
            return float(self.bid_upper)
        return default_bid_upper(self.samples.hourly_minima)

    def params(self, epsilon: float, theta: float) -> RobustnessParams:
        return RobustnessParams.for_minima(
            self.samples.hourly_minima,
            epsilon=epsilon,
            theta=theta,
            bid_lower=self.bid_lower,
            bid_upper=self.resolved_upper(),
        )


def tso_objective(schedules, samples) -> float:
    """Total capacity minus sample-mean shortfall, summed over aggregators.

    The shortfall of one sample day is accumulated minute by minute, so
    an hour sold 1 kW above a sample's floor for all 60 minutes costs 60
    penalty units against 1 unit of capacity.  That asymmetry is the
    point: the score rewards capacity only when it is nearly always
    deliverable.
    """
    if isinstance(schedules, BidSchedule):
        schedules = [schedules]
    if isinstance(samples, SampleSet):
        samples = [samples]
    if len(schedules) != len(samples):
        raise TunerError(
            f"{len(schedules)} schedules against {len(samples)} sample sets"
        )
    total = 0.0
    for schedule, sample_set in zip(schedules, samples):
        bids = np.asarray(schedule.bids, dtype=float)
        if bids.shape != (24,):
            raise TunerError(f"schedules carry 24 hourly bids, got {bids.shape}")
        minute_bids = np.repeat(bids, 60)
        shortfall = np.maximum(minute_bids[None, :] - sample_set.profiles, 0.0)
        total += bids.sum() - shortfall.sum() / sample_set.n_samples
    return float(total)


def _cell_penalty(schedules, samples) -> tuple[float, float]:
    capacity = 0.0
    penalty = 0.0
    for schedule, sample_set in zip(schedules, samples):
        bids = np.asarray(schedule.bids, dtype=float)
        capacity += bids.sum()
        shortfall = np.maximum(np.repeat(bids, 60)[None, :] - sample_set.profiles, 0.0)
        penalty += shortfall.sum() / sample_set.n_samples
    return capacity, penalty


def _solve_cell(aggregators, epsilon, theta):
    schedules = []
    for spec in aggregators:
        try:
            schedules.append(
                optimize_bids(spec.samples, spec.prices, spec.params(epsilon, theta))
            )
        except InfeasibleBidModel:
            return STATUS_INFEASIBLE, None
    return STATUS_OPTIMAL, schedules


_WORKER_AGGREGATORS = None


def _init_worker(aggregators) -> None:
    global _WORKER_AGGREGATORS
    _WORKER_AGGREGATORS = aggregators


def _solve_cell_worker(cell):
    epsilon, theta = cell
    return _solve_cell(_WORKER_AGGREGATORS, epsilon, theta)


@dataclass
class GridSearchResult:
    """Scored (epsilon, theta) surface with the schedules behind it."""

    epsilon_grid: np.ndarray
    theta_grid: np.ndarray
    objective_surface: np.ndarray
    capacity_surface: np.ndarray
    penalty_surface: np.ndarray
    status: np.ndarray
    schedules: list
    best_cell: tuple[int, int] | None

    @property
    def best_epsilon(self) -> float | None:
        if self.best_cell is None:
            return None
        return float(self.epsilon_grid[self.best_cell[0]])

    @property
    def best_theta(self) -> float | None:
        if self.best_cell is None:
            return None
        return float(self.theta_grid[self.best_cell[1]])

    @property
    def best_objective(self) -> float | None:
        if self.best_cell is None:
            return None
        return float(self.objective_surface[self.best_cell])

    def write_surface_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epsilon,theta,objective_kw,total_capacity_kw,mean_penalty_kw,status\n")
            for i, epsilon in enumerate(self.epsilon_grid):
                for j, theta in enumerate(self.theta_grid):
                    fh.write(
                        f"{epsilon:.10g},{theta:.10g},"
                        f"{self.objective_surface[i, j]:.10g},"
                        f"{self.capacity_surface[i, j]:.10g},"
                        f"{self.penalty_surface[i, j]:.10g},"
                        f"{self.status[i, j]}\n"
                    )

    def argmax_json_dict(self) -> dict:
        if self.best_cell is None:
            return {
                "status": "all_infeasible",
                "epsilon": None,
                "theta": None,
                "objective_kw": None,
                "total_capacity_kw": None,
                "mean_penalty_kw": None,
            }
        i, j = self.best_cell
        return {
            "status": STATUS_OPTIMAL,
            "epsilon": float(self.epsilon_grid[i]),
            "theta": float(self.theta_grid[j]),
            "objective_kw": float(self.objective_surface[i, j]),
            "total_capacity_kw": float(self.capacity_surface[i, j]),
            "mean_penalty_kw": float(self.penalty_surface[i, j]),
        }

    def save_argmax_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.argmax_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def grid_search(
    aggregators,
    epsilon_grid=None,
    theta_grid=None,
    jobs: int = 1,
    score_samples=None,
) -> GridSearchResult:
    """Solve every grid cell and report the best finite one.

    Infeasible cells keep -inf objective and are never the argmax, so a
    cell that sells nothing stays distinguishable from one that cannot
    be solved at all.  Ties go to the smaller epsilon, then the smaller
    theta.
    """
    if isinstance(aggregators, AggregatorSpec):
        aggregators = [aggregators]
    aggregators = list(aggregators)
    if not aggregators:
        raise TunerError("need at least one aggregator")
    epsilon_grid = np.asarray(
        DEFAULT_EPSILON_GRID if epsilon_grid is None else epsilon_grid, dtype=float
    )
    theta_grid = np.asarray(
        DEFAULT_THETA_GRID if theta_grid is None else theta_grid, dtype=float
    )
    if epsilon_grid.size == 0 or theta_grid.size == 0:
        raise TunerError("grids must be non-empty")
    if np.any(epsilon_grid <= 0.0) or np.any(epsilon_grid >= 1.0):
        raise TunerError("epsilon grid values must lie strictly inside (0, 1)")
    if np.any(theta_grid < 0.0) or not np.all(np.isfinite(theta_grid)):
        raise TunerError("theta grid values must be finite and non-negative")
    if jobs < 1:
        raise TunerError("jobs must be >= 1")
    if score_samples is not None:
        if isinstance(score_samples, SampleSet):
            score_samples = [score_samples]
        score_samples = list(score_samples)
        if len(score_samples) != len(aggregators):
            raise TunerError("one scoring sample set per aggregator is required")

    cells = [(float(e), float(t)) for e in epsilon_grid for t in theta_grid]
    if jobs == 1:
        outcomes = [_solve_cell(aggregators, e, t) for e, t in cells]
    else:
        with ProcessPoolExecutor(
            max_workers=min(jobs, len(cells)),
            initializer=_init_worker,
            initargs=(aggregators,),
        ) as pool:
            outcomes = list(pool.map(_solve_cell_worker, cells))

    n_e, n_t = epsilon_grid.size, theta_grid.size
    objective = np.full((n_e, n_t), -np.inf)
    capacity = np.full((n_e, n_t), np.nan)
    penalty = np.full((n_e, n_t), np.nan)
    status = np.full((n_e, n_t), STATUS_INFEASIBLE, dtype=object)
    schedules = [[None] * n_t for _ in range(n_e)]
    scoring_sets = (
        [spec.samples for spec in aggregators] if score_samples is None else score_samples
    )

    best = None
    for flat, (cell_status, cell_schedules) in enumerate(outcomes):
        i, j = divmod(flat, n_t)
        status[i, j] = cell_status
        if cell_status != STATUS_OPTIMAL:
            continue
        schedules[i][j] = cell_schedules
        cap, pen = _cell_penalty(cell_schedules, scoring_sets)
        capacity[i, j] = cap
        penalty[i, j] = pen
        objective[i, j] = cap - pen
        key = (float(epsilon_grid[i]), float(theta_grid[j]))
        if (
            best is None
            or objective[i, j] > best[0]
            or (objective[i, j] == best[0] and key < best[1])
        ):
            best = (objective[i, j], key, (i, j))

    return GridSearchResult(
        epsilon_grid=epsilon_grid,
        theta_grid=theta_grid,
        objective_surface=objective,
        capacity_surface=capacity,
        penalty_surface=penalty,
        status=status,
        schedules=schedules,
        best_cell=None if best is None else best[2],
    )
