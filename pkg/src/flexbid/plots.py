"""Figure rendering for the report outputs.

Figures are built on explicit Figure objects with the Agg canvas, never
through the pyplot state machine, so rendering stays usable from worker
processes and leaves no global state behind.  Every function returns
the Figure; `save_figure` writes it as PNG.
"""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .fleet import BaselineSeries

_SPAN_COLORS = {"burn-in": "0.85", "in-sample": "#d8e8f6", "out-of-sample": "#e8f2df"}


def save_figure(fig: Figure, path, dpi: int = 130) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=dpi, format="png")


def _shade_periods(ax, split) -> None:
    for label, days in (
        ("burn-in", split.burn_in_days),
        ("in-sample", split.in_sample_days),
        ("out-of-sample", split.out_of_sample_days),
    ):
        if len(days) == 0:
            continue
        ax.axvspan(
            days.min() - 0.5,
            days.max() + 0.5,
            color=_SPAN_COLORS[label],
            zorder=0,
            label=label,
        )


def baseline_figure(series: BaselineSeries, split=None) -> Figure:
    """Daily mean and floor of the simulated consumption."""
    fig = Figure(figsize=(9.0, 4.0))
    ax = fig.add_subplot(1, 1, 1)
    days = np.arange(series.n_days)
    ax.plot(days, series.values.mean(axis=1), color="C0", label="daily mean")
    ax.plot(
        days,
        series.values.min(axis=1),
        color="C3",
        linewidth=0.9,
        label="daily minimum",
    )
    if split is not None:
        _shade_periods(ax, split)
    ax.set_xlabel("day")
    ax.set_ylabel("kW")
    ax.set_xlim(-0.5, series.n_days - 0.5)
    ax.set_ylim(bottom=0.0)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    return fig


def _band(ax, days, color, label):
    # Hourly availability floors: the band spans the 10th to 90th
    # percentile of per-day hourly minima, the line is their mean.
    minima = np.asarray(days, dtype=float).reshape(-1, 24, 60).min(axis=2)
    hours = np.arange(24)
    lo, hi = np.percentile(minima, [10.0, 90.0], axis=0)
    ax.fill_between(hours, lo, hi, step="post", alpha=0.25, color=color, linewidth=0)
    ax.plot(hours, minima.mean(axis=0), drawstyle="steps-post", color=color,
            linewidth=0.9, label=label)


def bids_figure(schedules, in_days, out_days=None) -> Figure:
    """Bid curves over the availability floors they must stay under."""
    if not isinstance(schedules, (list, tuple)):
        schedules = [schedules]
    fig = Figure(figsize=(9.0, 4.2))
    ax = fig.add_subplot(1, 1, 1)
    _band(ax, in_days, "C0", "in-sample floor")
    if out_days is not None:
        _band(ax, out_days, "C2", "out-of-sample floor")
    hours = np.arange(24)
    for k, schedule in enumerate(schedules):
        ax.plot(
            hours,
            schedule.bids,
            drawstyle="steps-post",
            color=f"C{k + 3}",
            label=f"bid, theta={schedule.theta:g}",
        )
    ax.set_xlabel("hour")
    ax.set_ylabel("kW")
    ax.set_xlim(0, 23)
    ax.set_ylim(bottom=0.0)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    return fig


def surface_figure(result) -> Figure:
    """Tuner objective heat map with the argmax cell marked."""
    fig = Figure(figsize=(7.0, 5.0))
    ax = fig.add_subplot(1, 1, 1)
    surface = np.array(result.objective_surface, dtype=float)
    masked = np.ma.masked_invalid(np.where(np.isneginf(surface), np.nan, surface))
    image = ax.imshow(masked, origin="lower", aspect="auto", cmap="viridis")
    image.cmap.set_bad("0.9")
    ax.set_xticks(np.arange(result.theta_grid.size))
    ax.set_xticklabels([f"{t:g}" for t in result.theta_grid], fontsize=7)
    step = max(1, result.epsilon_grid.size // 15)
    ax.set_yticks(np.arange(result.epsilon_grid.size)[::step])
    ax.set_yticklabels([f"{e:g}" for e in result.epsilon_grid[::step]], fontsize=7)
    ax.set_xlabel("theta (kW)")
    ax.set_ylabel("epsilon")
    if result.best_cell is not None:
        i, j = result.best_cell
        ax.plot(j, i, marker="*", markersize=14, color="C3")
    fig.colorbar(image, ax=ax, label="objective (kW)")
    fig.tight_layout()
    return fig


def day_report_figure(schedule, days, day_ids=None) -> Figure:
    """Per-day worst shortfall; violated days stand out in red."""
    days = np.asarray(days, dtype=float)
    if days.ndim == 1:
        days = days[None, :]
    if day_ids is None:
        day_ids = np.arange(days.shape[0])
    worst = np.maximum(np.repeat(schedule.bids, 60)[None, :] - days, 0.0).max(axis=1)
    colors = np.where(worst > 0.0, "C3", "C0")
    fig = Figure(figsize=(9.0, 3.6))
    ax = fig.add_subplot(1, 1, 1)
    ax.bar(day_ids, worst, color=colors, width=0.8)
    ax.set_xlabel("day")
    ax.set_ylabel("max shortfall (kW)")
    ax.set_ylim(bottom=0.0)
    fig.tight_layout()
    return fig
