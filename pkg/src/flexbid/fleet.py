"""Minute-resolution baseline consumption simulator for an EV fleet.

Each vehicle plugs in a random number of times per day (Poisson), with
plug-in minutes drawn from a mixture of an evening window and the whole
day, and session lengths drawn exponentially with a mean that grows with
the square root of the day index.  A charging vehicle draws the full
charger power; overlapping sessions on one vehicle merge rather than
stack.  Sessions run across midnight until they finish, so early-morning
consumption comes from the previous evening's plug-ins and the first
simulated day starts artificially empty; downstream period splitting
treats that day as burn-in.

Day indices are 0-based and day 0 is a Monday, so labels repeat in
weekly blocks of five weekdays and two weekend days.  Minutes are
0-based within the day; hour h covers minutes [60h, 60h + 59].
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

MINUTES_PER_DAY = 1440

# Plug-in minutes for the evening mixture component (hours 17-23).
_EVENING_START = 17 * 60
_EVENING_SPAN = MINUTES_PER_DAY - _EVENING_START


class FleetConfigError(ValueError):
    """Malformed fleet simulation configuration."""


@dataclass(frozen=True)
class FleetConfig:
    """Fleet composition and stochastic session behaviour.

    Attributes:
        n_vehicles: portfolio size, >= 0.
        n_days: simulated days, >= 1.
        charger_power: draw of one active vehicle in kW, >= 0.
        weekday_session_rate: expected plug-ins per vehicle per weekday.
        weekend_session_rate: expected plug-ins per vehicle per weekend
            day.
        evening_weight: probability that a session starts inside the
            evening window (hours 17-23) instead of anywhere in the day.
        base_mean_charge_minutes: mean session length on day 0.
        drift_coefficient: added mean minutes per square root of the day
            index, so day d draws sessions of mean
            base_mean_charge_minutes + drift_coefficient * sqrt(d).
        rng_seed: seed for the PCG64 generator behind all draws.
    """

    n_vehicles: int = 20
    n_days: int = 90
    charger_power: float = 2.3
    weekday_session_rate: float = 6.0
    weekend_session_rate: float = 7.0
    evening_weight: float = 0.45
    base_mean_charge_minutes: float = 240.0
    drift_coefficient: float = 12.0
    rng_seed: int = 1

    def __post_init__(self) -> None:
        if int(self.n_vehicles) != self.n_vehicles or self.n_vehicles < 0:
            raise FleetConfigError(f"n_vehicles must be >= 0, got {self.n_vehicles}")
        if int(self.n_days) != self.n_days or self.n_days < 1:
            raise FleetConfigError(f"n_days must be >= 1, got {self.n_days}")
        for name in (
            "charger_power",
            "weekday_session_rate",
            "weekend_session_rate",
            "base_mean_charge_minutes",
            "drift_coefficient",
        ):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0.0:
                raise FleetConfigError(f"{name} must be finite and >= 0, got {value}")
        if not 0.0 <= self.evening_weight <= 1.0:
            raise FleetConfigError(
                f"evening_weight must lie in [0, 1], got {self.evening_weight}"
            )
        if int(self.rng_seed) != self.rng_seed:
            raise FleetConfigError(f"rng_seed must be an integer, got {self.rng_seed}")

    def to_json_dict(self) -> dict:
        return {k: (float(v) if isinstance(v, float) else int(v)) for k, v in asdict(self).items()}

    @classmethod
    def from_json_dict(cls, data: dict) -> "FleetConfig":
        return cls(**data)

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "FleetConfig":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass
class BaselineSeries:
    """Simulated portfolio consumption, one row of 1440 minutes per day."""

    values: np.ndarray
    day_labels: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        self.day_labels = np.asarray(self.day_labels, dtype=bool)
        if self.values.ndim != 2 or self.values.shape[1] != MINUTES_PER_DAY:
            raise FleetConfigError(
                f"series must be (n_days, {MINUTES_PER_DAY}), got {self.values.shape}"
            )
        if self.day_labels.shape != (self.values.shape[0],):
            raise FleetConfigError("one weekend flag per day is required")
        if self.values.size and (
            not np.all(np.isfinite(self.values)) or np.any(self.values < 0.0)
        ):
            raise FleetConfigError("consumption values must be finite and >= 0")

    @property
    def n_days(self) -> int:
        return self.values.shape[0]


def weekend_labels(n_days: int) -> np.ndarray:
    """Weekend flags for 0-based day indices with day 0 a Monday."""
    return (np.arange(n_days) % 7) >= 5


def simulate_fleet(config: FleetConfig) -> BaselineSeries:
    """Draw one fleet consumption series; bit-identical per config."""
    rng = np.random.Generator(np.random.PCG64(config.rng_seed))
    n_days = int(config.n_days)
    n_vehicles = int(config.n_vehicles)
    labels = weekend_labels(n_days)
    total = n_days * MINUTES_PER_DAY
    if n_vehicles == 0:
        return BaselineSeries(values=np.zeros((n_days, MINUTES_PER_DAY)), day_labels=labels)

    # Signed plug-in/plug-out marks per vehicle; cumulative sums yield
    # concurrent-session counts, and any positive count means charging.
    marks = np.zeros((n_vehicles, total + 1), dtype=np.int64)
    for day in range(n_days):
        rate = (
            config.weekend_session_rate if labels[day] else config.weekday_session_rate
        )
        mean_minutes = config.base_mean_charge_minutes + config.drift_coefficient * math.sqrt(day)
        counts = rng.poisson(rate, n_vehicles)
        n_sessions = int(counts.sum())
        if n_sessions == 0:
            continue
        vehicle = np.repeat(np.arange(n_vehicles), counts)
        in_evening = rng.random(n_sessions) < config.evening_weight
        position = rng.random(n_sessions)
        minute = np.where(
            in_evening,
            _EVENING_START + np.floor(position * _EVENING_SPAN),
            np.floor(position * MINUTES_PER_DAY),
        ).astype(np.int64)
        length = np.maximum(
            np.rint(rng.exponential(mean_minutes, n_sessions)).astype(np.int64), 1
        )
        start = day * MINUTES_PER_DAY + minute
        end = np.minimum(start + length, total)
        np.add.at(marks, (vehicle, start), 1)
        np.add.at(marks, (vehicle, end), -1)

    active = np.cumsum(marks[:, :-1], axis=1) > 0
    consumption = config.charger_power * active.sum(axis=0).astype(float)
    return BaselineSeries(
        values=consumption.reshape(n_days, MINUTES_PER_DAY), day_labels=labels
    )


def day_slice(series: BaselineSeries, day: int) -> np.ndarray:
    """Minute profile of one day."""
    if not 0 <= day < series.n_days:
        raise IndexError(f"day {day} outside 0..{series.n_days - 1}")
    return series.values[day]


def write_baseline_csv(series: BaselineSeries, path) -> None:
    """Write `day,minute,kw` rows, one per minute, 0-based indices."""
    with open(path, "w") as fh:
        fh.write("day,minute,kw\n")
        for day in range(series.n_days):
            row = series.values[day]
            fh.write(
                "".join(
                    f"{day},{minute},{row[minute]:.10g}\n"
                    for minute in range(MINUTES_PER_DAY)
                )
            )


def read_baseline_csv(path) -> BaselineSeries:
    """Rebuild a series from its CSV export."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "day,minute,kw":
            raise FleetConfigError(f"unexpected baseline header: {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        raise FleetConfigError("baseline CSV carries no rows")
    days = data[:, 0].astype(int)
    minutes = data[:, 1].astype(int)
    n_days = int(days.max()) + 1
    if data.shape[0] != n_days * MINUTES_PER_DAY:
        raise FleetConfigError(
            f"expected {n_days * MINUTES_PER_DAY} rows for {n_days} days, got {data.shape[0]}"
        )
    if np.any(minutes < 0) or np.any(minutes >= MINUTES_PER_DAY) or np.any(days < 0):
        raise FleetConfigError("day or minute index out of range")
    values = np.full((n_days, MINUTES_PER_DAY), np.nan)
    values[days, minutes] = data[:, 2]
    if np.any(np.isnan(values)):
        raise FleetConfigError("baseline CSV misses some (day, minute) pairs")
    return BaselineSeries(values=values, day_labels=weekend_labels(n_days))
