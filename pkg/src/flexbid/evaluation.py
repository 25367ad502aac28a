"""Scoring of a bid schedule against realized or sampled days.

A day counts as violated as soon as one minute's consumption falls
strictly below the bid of its hour; equality is delivery.  Shortfall is
the positive part of bid minus consumption per minute.  Profit is the
capacity payment and does not depend on delivery.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bidding import BidSchedule
from .fleet import MINUTES_PER_DAY


class EvaluationError(ValueError):
    """Malformed evaluation inputs."""


@dataclass
class EvaluationReport:
    """Day-level violation statistics for one schedule on one day set."""

    n_days: int
    violation_days: int
    violation_frequency: float
    mean_shortfall: float
    max_shortfall: float
    profit: float
    compliant: bool
    epsilon_check: float

    def to_json_dict(self) -> dict:
        return {
            "n_days": int(self.n_days),
            "violation_days": int(self.violation_days),
            "violation_frequency": float(self.violation_frequency),
            "mean_shortfall_kw": float(self.mean_shortfall),
            "max_shortfall_kw": float(self.max_shortfall),
            "profit": float(self.profit),
            "compliant": bool(self.compliant),
            "epsilon_check": float(self.epsilon_check),
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _as_days(days) -> np.ndarray:
    days = np.asarray(days, dtype=float)
    if days.ndim == 1:
        days = days[None, :]
    if days.ndim != 2 or days.shape[0] == 0:
        raise EvaluationError("need at least one evaluation day")
    if days.shape[1] != MINUTES_PER_DAY:
        raise EvaluationError(
            f"each day carries {MINUTES_PER_DAY} minutes, got {days.shape[1]}"
        )
    return days


def _minute_bids(schedule: BidSchedule) -> np.ndarray:
    bids = np.asarray(schedule.bids, dtype=float)
    if bids.shape != (24,):
        raise EvaluationError(f"schedule must carry 24 hourly bids, got {bids.shape}")
    return np.repeat(bids, 60)


def shortfall_tensor(schedule: BidSchedule, days) -> np.ndarray:
    """Positive part of bid minus consumption, indexed (day, hour, minute)."""
    days = _as_days(days)
    shortfall = np.maximum(_minute_bids(schedule)[None, :] - days, 0.0)
    return shortfall.reshape(days.shape[0], 24, 60)


def evaluate_bids(
    schedule: BidSchedule,
    days,
    epsilon_check: float | None = None,
    prices=None,
) -> EvaluationReport:
    """Score a schedule on a stack of day profiles."""
    days = _as_days(days)
    if epsilon_check is None:
        epsilon_check = schedule.epsilon
    if prices is None:
        price_values = np.asarray(schedule.prices, dtype=float)
    else:
        price_values = np.asarray(getattr(prices, "values", prices), dtype=float)
    if price_values.shape != (24,):
        raise EvaluationError(f"need 24 hourly prices, got {price_values.shape}")

    minute_bids = _minute_bids(schedule)
    shortfall = np.maximum(minute_bids[None, :] - days, 0.0)
    violated = np.any(days < minute_bids[None, :], axis=1)
    n_days = days.shape[0]
    violation_days = int(np.count_nonzero(violated))
    frequency = violation_days / n_days
    return EvaluationReport(
        n_days=n_days,
        violation_days=violation_days,
        violation_frequency=frequency,
        mean_shortfall=float(shortfall.mean()),
        max_shortfall=float(shortfall.max()),
        profit=float(price_values @ schedule.bids),
        compliant=frequency <= epsilon_check,
        epsilon_check=float(epsilon_check),
    )


def write_day_report_csv(schedule: BidSchedule, days, path, day_ids=None) -> None:
    """Per-day `day,violated,max_shortfall_kw` rows for plotting."""
    days = _as_days(days)
    if day_ids is None:
        day_ids = np.arange(days.shape[0])
    day_ids = np.asarray(day_ids, dtype=int)
    if day_ids.shape != (days.shape[0],):
        raise EvaluationError("one day id per evaluated day is required")
    shortfall = np.maximum(_minute_bids(schedule)[None, :] - days, 0.0)
    worst = shortfall.max(axis=1)
    with open(path, "w") as fh:
        fh.write("day,violated,max_shortfall_kw\n")
        for day_id, value in zip(day_ids, worst):
            fh.write(f"{day_id},{int(value > 0.0)},{value:.10g}\n")
