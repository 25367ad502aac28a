"""Command-line pipeline: simulate, bid, evaluate, tune.

Each subcommand reads one JSON run configuration (plus flag overrides),
writes its outputs into the configured directory, and renders a PNG
figure next to every delimited output.  All randomness sits behind the
seeds in the configuration, so a rerun with the same config reproduces
every CSV and JSON byte for byte.

Exit codes: 0 success, 1 usage or configuration error, 2 infeasible or
unbounded model, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bidding import (
    BidModelError,
    BidSchedule,
    InfeasibleBidModel,
    PriceCurve,
    RobustnessParams,
    UnboundedBidModel,
    optimize_bids,
)
from .evaluation import evaluate_bids, write_day_report_csv
from .fleet import FleetConfig, FleetConfigError, read_baseline_csv, simulate_fleet, write_baseline_csv
from .plots import baseline_figure, bids_figure, day_report_figure, save_figure, surface_figure
from .scenarios import SampleSet, ScenarioError, bootstrap_samples, hourly_minima, split_periods
from .tuner import AggregatorSpec, TunerError, grid_search


class UsageError(ValueError):
    """Bad flags or configuration; maps to exit code 1."""


_CONFIG_KEYS = {
    "fleet",
    "burn_in",
    "in_sample_len",
    "sample_count",
    "sample_seed",
    "sample_replace",
    "epsilon",
    "thetas",
    "bid_lower",
    "bid_upper",
    "big_m",
    "prices",
    "epsilon_grid",
    "theta_grid",
    "jobs",
    "output_dir",
}


@dataclass(frozen=True)
class RunConfig:
    """Everything one pipeline run depends on, seeds included."""

    fleet: FleetConfig = FleetConfig()
    burn_in: int = 1
    in_sample_len: int = 14
    sample_count: int = 30
    sample_seed: int | None = None
    sample_replace: bool = True
    epsilon: float = 0.10
    thetas: tuple = (0.35,)
    bid_lower: float = 0.0
    bid_upper: float | None = None
    big_m: float | None = None
    prices: tuple = tuple([1.0] * 24)
    epsilon_grid: tuple | None = None
    theta_grid: tuple | None = None
    jobs: int = 1
    output_dir: str = "out"

    def __post_init__(self) -> None:
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        object.__setattr__(self, "prices", tuple(float(p) for p in self.prices))
        if self.epsilon_grid is not None:
            object.__setattr__(
                self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid)
            )
        if self.theta_grid is not None:
            object.__setattr__(
                self, "theta_grid", tuple(float(t) for t in self.theta_grid)
            )
        if not 0.0 < self.epsilon < 1.0:
            raise UsageError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not self.thetas or any(t < 0.0 or not np.isfinite(t) for t in self.thetas):
            raise UsageError("thetas must be a non-empty list of finite values >= 0")
        if self.sample_count < 1:
            raise UsageError("sample_count must be >= 1")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")
        if len(self.prices) != 24 or any(not np.isfinite(p) for p in self.prices):
            raise UsageError("prices must be 24 finite hourly values")

    @property
    def resolved_sample_seed(self) -> int:
        # Tying the bootstrap seed to the fleet seed keeps multi-seed
        # sweeps to a single knob unless the config separates them.
        if self.sample_seed is None:
            return self.fleet.rng_seed
        return int(self.sample_seed)

    def to_json_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["fleet"] = self.fleet.to_json_dict()
        for key in ("thetas", "prices", "epsilon_grid", "theta_grid"):
            if data[key] is not None:
                data[key] = list(data[key])
        return data

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunConfig":
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        if "fleet" in kwargs:
            kwargs["fleet"] = FleetConfig.from_json_dict(kwargs["fleet"])
        if isinstance(kwargs.get("prices"), (int, float)):
            kwargs["prices"] = [float(kwargs["prices"])] * 24
        return cls(**kwargs)

    @classmethod
    def load_json(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError(f"config {path} must hold a JSON object")
        return cls.from_json_dict(data)

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# -- shared plumbing ---------------------------------------------------------


def _outdir(config: RunConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _baseline_path(config: RunConfig, override) -> Path:
    if override is not None:
        return Path(override)
    return Path(config.output_dir) / "baseline.csv"


def _load_series(path: Path):
    if not path.exists():
        raise FileNotFoundError(f"baseline file {path} does not exist")
    return read_baseline_csv(path)


def _samples_for(config: RunConfig, series):
    split = split_periods(series, config.burn_in, config.in_sample_len)
    samples = bootstrap_samples(
        series,
        split,
        count=config.sample_count,
        seed=config.resolved_sample_seed,
        replace=config.sample_replace,
    )
    return split, samples


def _params_for(config: RunConfig, samples, theta: float) -> RobustnessParams:
    return RobustnessParams.for_minima(
        samples.hourly_minima,
        epsilon=config.epsilon,
        theta=theta,
        bid_lower=config.bid_lower,
        bid_upper=config.bid_upper,
        big_m=config.big_m,
    )


def _price_curve(config: RunConfig) -> PriceCurve:
    return PriceCurve(values=np.array(config.prices, dtype=float))


def _theta_tag(theta: float) -> str:
    return f"{theta:g}"


def _dump_json(payload: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands -------------------------------------------------------------


def cmd_simulate(config: RunConfig) -> int:
    out = _outdir(config)
    series = simulate_fleet(config.fleet)
    write_baseline_csv(series, out / "baseline.csv")
    config.save_json(out / "simulate_config.json")
    try:
        split = split_periods(series, config.burn_in, config.in_sample_len)
    except ScenarioError:
        split = None
    save_figure(baseline_figure(series, split), out / "baseline.png")
    print(f"wrote {out / 'baseline.csv'} ({series.n_days} days)")
    return 0


def cmd_bid(config: RunConfig, baseline=None) -> int:
    out = _outdir(config)
    series = _load_series(_baseline_path(config, baseline))
    split, samples = _samples_for(config, series)
    prices = _price_curve(config)

    schedules = []
    for theta in config.thetas:
        schedules.append(
            optimize_bids(samples, prices, _params_for(config, samples, theta))
        )

    config.save_json(out / "bid_config.json")
    for theta, schedule in zip(config.thetas, schedules):
        stem = f"schedule_theta_{_theta_tag(theta)}"
        payload = schedule.to_json_dict()
        payload["config"] = config.to_json_dict()
        _dump_json(payload, out / f"{stem}.json")
        schedule.save_csv(out / f"{stem}.csv")
        print(
            f"theta={theta:g}: objective {schedule.objective:.6g}, "
            f"wrote {out / (stem + '.json')}"
        )
    out_days = series.values[split.out_of_sample_days]
    save_figure(bids_figure(schedules, samples.profiles, out_days), out / "bids.png")
    return 0


def cmd_evaluate(config: RunConfig, schedules, baseline=None) -> int:
    if not schedules:
        raise UsageError("evaluate needs at least one --schedule file")
    out = _outdir(config)
    series = _load_series(_baseline_path(config, baseline))
    split, samples = _samples_for(config, series)
    out_days = series.values[split.out_of_sample_days]
    config.save_json(out / "evaluate_config.json")

    for schedule_path in schedules:
        schedule_path = Path(schedule_path)
        if not schedule_path.exists():
            raise FileNotFoundError(f"schedule file {schedule_path} does not exist")
        schedule = BidSchedule.load_json(schedule_path)
        stem = schedule_path.stem
        # The in-sample report scores the bootstrap distribution the
        # schedule was fit on; the out-of-sample report scores the
        # held-out days the bidder never saw.
        for tag, days, ids in (
            ("in_sample", samples.profiles, samples.source_days),
            ("out_of_sample", out_days, split.out_of_sample_days),
        ):
            report = evaluate_bids(schedule, days)
            payload = report.to_json_dict()
            payload["schedule_file"] = schedule_path.name
            payload["period"] = tag
            payload["config"] = config.to_json_dict()
            _dump_json(payload, out / f"{stem}_{tag}.json")
            write_day_report_csv(
                schedule, days, out / f"{stem}_{tag}_days.csv", day_ids=ids
            )
            save_figure(
                day_report_figure(schedule, days, ids), out / f"{stem}_{tag}.png"
            )
            print(
                f"{stem} {tag}: {report.violation_days}/{report.n_days} days violated"
                f" ({report.violation_frequency:.3f})"
            )
    return 0


def cmd_tune(config: RunConfig, baseline=None, out_of_sample: bool = False) -> int:
    out = _outdir(config)
    series = _load_series(_baseline_path(config, baseline))
    split, samples = _samples_for(config, series)
    spec = AggregatorSpec(
        identifier="fleet",
        samples=samples,
        prices=_price_curve(config),
        bid_lower=config.bid_lower,
        bid_upper=config.bid_upper,
    )
    score_samples = None
    if out_of_sample:
        out_days = series.values[split.out_of_sample_days]
        score_samples = [
            SampleSet(
                profiles=out_days,
                hourly_minima=np.stack([hourly_minima(day) for day in out_days]),
                source_days=split.out_of_sample_days,
            )
        ]
    result = grid_search(
        spec,
        epsilon_grid=config.epsilon_grid,
        theta_grid=config.theta_grid,
        jobs=config.jobs,
        score_samples=score_samples,
    )

    config.save_json(out / "tune_config.json")
    result.write_surface_csv(out / "surface.csv")
    argmax = result.argmax_json_dict()
    argmax["config"] = config.to_json_dict()
    argmax["scored_on"] = "out_of_sample" if out_of_sample else "in_sample"
    _dump_json(argmax, out / "argmax.json")
    save_figure(surface_figure(result), out / "surface.png")

    if result.best_cell is None:
        print("every grid cell is infeasible; see surface.csv", file=sys.stderr)
        return 2
    print(
        f"best cell: epsilon={result.best_epsilon:g} theta={result.best_theta:g} "
        f"objective={result.best_objective:.6g}"
    )
    return 0


# -- argument parsing --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags, which this interface
    # reserves for infeasible models; route usage problems to 1 instead.
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flexbid", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration file")
        p.add_argument("--output-dir", help="directory for outputs")
        p.add_argument("--seed", type=int, help="fleet seed (and bootstrap seed unless set separately)")

    p_sim = sub.add_parser("simulate", help="simulate the fleet baseline")
    common(p_sim)
    p_sim.add_argument("--vehicles", type=int, help="fleet size")
    p_sim.add_argument("--days", type=int, help="horizon length in days")

    p_bid = sub.add_parser("bid", help="optimize hourly reserve bids")
    common(p_bid)
    p_bid.add_argument("--baseline", help="baseline CSV (default <output-dir>/baseline.csv)")
    p_bid.add_argument("--epsilon", type=float, help="violation budget in (0,1)")
    p_bid.add_argument("--theta", type=_float_list, help="comma-separated radius list")
    p_bid.add_argument("--samples", type=int, help="bootstrap sample count")
    p_bid.add_argument("--sample-seed", type=int, help="bootstrap seed")

    p_eval = sub.add_parser("evaluate", help="score schedules on realized days")
    common(p_eval)
    p_eval.add_argument("--baseline", help="baseline CSV (default <output-dir>/baseline.csv)")
    p_eval.add_argument(
        "--schedule", action="append", default=[], help="schedule JSON (repeatable)"
    )

    p_tune = sub.add_parser("tune", help="grid search over (epsilon, theta)")
    common(p_tune)
    p_tune.add_argument("--baseline", help="baseline CSV (default <output-dir>/baseline.csv)")
    p_tune.add_argument("--epsilon-grid", type=_float_list, help="comma-separated values")
    p_tune.add_argument("--theta-grid", type=_float_list, help="comma-separated values")
    p_tune.add_argument("--jobs", type=int, help="parallel cell solves")
    p_tune.add_argument(
        "--out-of-sample",
        action="store_true",
        help="score the surface on held-out days instead of the fit samples",
    )
    return parser


def _config_from_args(args) -> RunConfig:
    if args.config is not None:
        config = RunConfig.load_json(args.config)
    else:
        config = RunConfig()

    updates = {}
    fleet_updates = {}
    if args.output_dir is not None:
        updates["output_dir"] = args.output_dir
    if args.seed is not None:
        fleet_updates["rng_seed"] = args.seed
    if getattr(args, "vehicles", None) is not None:
        fleet_updates["n_vehicles"] = args.vehicles
    if getattr(args, "days", None) is not None:
        fleet_updates["n_days"] = args.days
    if getattr(args, "epsilon", None) is not None:
        updates["epsilon"] = args.epsilon
    if getattr(args, "theta", None) is not None:
        updates["thetas"] = tuple(args.theta)
    if getattr(args, "samples", None) is not None:
        updates["sample_count"] = args.samples
    if getattr(args, "sample_seed", None) is not None:
        updates["sample_seed"] = args.sample_seed
    if getattr(args, "epsilon_grid", None) is not None:
        updates["epsilon_grid"] = tuple(args.epsilon_grid)
    if getattr(args, "theta_grid", None) is not None:
        updates["theta_grid"] = tuple(args.theta_grid)
    if getattr(args, "jobs", None) is not None:
        updates["jobs"] = args.jobs

    if fleet_updates:
        updates["fleet"] = dataclasses.replace(config.fleet, **fleet_updates)
    if updates:
        config = dataclasses.replace(config, **updates)
    return config


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _config_from_args(args)
        if args.command == "simulate":
            return cmd_simulate(config)
        if args.command == "bid":
            return cmd_bid(config, baseline=args.baseline)
        if args.command == "evaluate":
            return cmd_evaluate(config, schedules=args.schedule, baseline=args.baseline)
        if args.command == "tune":
            return cmd_tune(
                config, baseline=args.baseline, out_of_sample=args.out_of_sample
            )
        raise UsageError(f"unknown command {args.command!r}")
    except (InfeasibleBidModel, UnboundedBidModel) as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, FleetConfigError, ScenarioError, TunerError, BidModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
