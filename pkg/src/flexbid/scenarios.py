"""Period splitting and bootstrap day sampling for bid optimization.

The first simulated day (or days) is burn-in and never sampled; the
following window is the in-sample period that feeds the empirical
distribution; everything after is held out for out-of-sample scoring.
Sample days are drawn from the in-sample window uniformly with
replacement, so the sample count may exceed the window length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .fleet import MINUTES_PER_DAY, BaselineSeries


class ScenarioError(ValueError):
    """Malformed split or sampling request."""


@dataclass(frozen=True)
class PeriodSplit:
    """Disjoint day-index groups covering a whole series."""

    burn_in_days: np.ndarray
    in_sample_days: np.ndarray
    out_of_sample_days: np.ndarray

    def __post_init__(self) -> None:
        for field in ("burn_in_days", "in_sample_days", "out_of_sample_days"):
            object.__setattr__(self, field, np.asarray(getattr(self, field), dtype=int))
        if self.in_sample_days.size == 0 or self.out_of_sample_days.size == 0:
            raise ScenarioError("both evaluation periods must be non-empty")
        merged = np.concatenate(
            [self.burn_in_days, self.in_sample_days, self.out_of_sample_days]
        )
        if np.unique(merged).size != merged.size:
            raise ScenarioError("periods overlap")


@dataclass
class SampleSet:
    """Bootstrap-drawn day profiles with their per-hour minima."""

    profiles: np.ndarray
    hourly_minima: np.ndarray
    source_days: np.ndarray

    def __post_init__(self) -> None:
        self.profiles = np.asarray(self.profiles, dtype=float)
        self.hourly_minima = np.asarray(self.hourly_minima, dtype=float)
        self.source_days = np.asarray(self.source_days, dtype=int)
        n = self.profiles.shape[0]
        if n == 0:
            raise ScenarioError("a sample set needs at least one profile")
        if self.profiles.shape != (n, MINUTES_PER_DAY):
            raise ScenarioError(
                f"profiles must be (n, {MINUTES_PER_DAY}), got {self.profiles.shape}"
            )
        if self.hourly_minima.shape != (n, 24) or self.source_days.shape != (n,):
            raise ScenarioError("minima and source days must align with profiles")

    @property
    def n_samples(self) -> int:
        return self.profiles.shape[0]

    def to_json_dict(self, include_profiles: bool = False) -> dict:
        data = {
            "hourly_minima_kw": [[float(v) for v in row] for row in self.hourly_minima],
            "source_days": [int(d) for d in self.source_days],
        }
        if include_profiles:
            data["profiles_kw"] = [[float(v) for v in row] for row in self.profiles]
        return data

    def save_json(self, path, include_profiles: bool = False) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(include_profiles), fh, indent=2, sort_keys=True)
            fh.write("\n")


def split_periods(
    series: BaselineSeries, burn_in: int = 1, in_sample_len: int = 14
) -> PeriodSplit:
    """Partition day indices into burn-in, in-sample, and out-of-sample."""
    if burn_in < 0 or in_sample_len < 1:
        raise ScenarioError("burn_in must be >= 0 and in_sample_len >= 1")
    n_days = series.n_days
    if burn_in + in_sample_len >= n_days:
        raise ScenarioError(
            f"{burn_in} burn-in + {in_sample_len} in-sample days leave no "
            f"out-of-sample period in a {n_days}-day series"
        )
    return PeriodSplit(
        burn_in_days=np.arange(burn_in),
        in_sample_days=np.arange(burn_in, burn_in + in_sample_len),
        out_of_sample_days=np.arange(burn_in + in_sample_len, n_days),
    )


def hourly_minima(profile: np.ndarray) -> np.ndarray:
    """Per-hour minute minimum of one day profile."""
    profile = np.asarray(profile, dtype=float)
    if profile.shape != (MINUTES_PER_DAY,):
        raise ScenarioError(
            f"a day profile carries {MINUTES_PER_DAY} minutes, got {profile.shape}"
        )
    return profile.reshape(24, 60).min(axis=1)


def bootstrap_samples(
    series: BaselineSeries,
    split: PeriodSplit,
    count: int = 30,
    seed: int = 0,
    replace: bool = True,
) -> SampleSet:
    """Draw sample days from the in-sample window, minima included."""
    if count < 1:
        raise ScenarioError(f"sample count must be >= 1, got {count}")
    window = split.in_sample_days
    if np.any(window < 0) or np.any(window >= series.n_days):
        raise ScenarioError("split refers to days outside the series")
    rng = np.random.Generator(np.random.PCG64(seed))
    if replace:
        source = window[rng.integers(0, window.size, size=count)]
    else:
        if count > window.size:
            raise ScenarioError(
                f"cannot draw {count} distinct days from a {window.size}-day window"
            )
        source = rng.choice(window, size=count, replace=False)
    profiles = series.values[source]
    minima = profiles.reshape(count, 24, 60).min(axis=2)
    return SampleSet(profiles=profiles, hourly_minima=minima, source_days=source)
