"""Distributionally robust reserve-capacity bid optimization.

Builds and solves the mixed-binary program that maximizes price-weighted
hourly capacity bids subject to a worst-case availability guarantee over
a Wasserstein ball of radius theta (kW) around the empirical sample
distribution, at violation budget epsilon.

For each bootstrap day sample i the model carries a binary flag q_i
(sample counted as violated in the worst case), a slack s_i and a
shared threshold t:

    maximize   sum_h price_h * bid_h
    subject to eps*N*t - sum_i s_i >= theta*N
               B[i][h] - bid_h + M*q_i >= t - s_i   for all i, h
               M*(1 - q_i) >= t - s_i               for all i
               bid_lower <= bid_h <= bid_upper, s_i >= 0, q_i in {0,1}

B[i][h] is sample i's minimum consumption over hour h, so one row per
(sample, hour) is exact for the minute-level availability requirement.

The assembled rows use per-row coefficients no larger than M wherever a
smaller value admits exactly the same binary assignments (a flagged
sample already carries s_i >= t, so its availability rows need only the
bid-box headroom), and add the budget-implied flag cardinality bound as
an explicit row when theta > 0; both keep the integer optimum unchanged
while making the relaxation far tighter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .lp import LpModel
from .milp import MilpModel, MilpSolution, brute_force_reference, solve_milp

# Constraint rows of a returned certificate must hold within this.
CERT_TOL = 1e-6

# Availability rows per sample kept eagerly active (the rest are lazy).
_SEED_ROWS = 3


class BidModelError(ValueError):
    """Malformed bidding inputs."""


class InfeasibleBidModel(RuntimeError):
    """The robustness requirements admit no bid schedule at all."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class UnboundedBidModel(RuntimeError):
    """The model admits arbitrarily large bids (missing upper bound)."""


@dataclass(frozen=True)
class RobustnessParams:
    """Robustness and box settings for one bid optimization.

    Attributes:
        epsilon: worst-case violation probability budget, in (0, 1).
        theta: Wasserstein ambiguity radius in kW, >= 0.
        big_m: row-deactivation constant, > 0.
        bid_lower: least allowed hourly bid (kW).
        bid_upper: largest allowed hourly bid (kW), finite.
    """

    epsilon: float
    theta: float
    big_m: float
    bid_lower: float
    bid_upper: float

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise BidModelError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.theta < 0.0 or not np.isfinite(self.theta):
            raise BidModelError(f"theta must be finite and >= 0, got {self.theta}")
        if self.big_m <= 0.0 or not np.isfinite(self.big_m):
            raise BidModelError(f"big_m must be finite and > 0, got {self.big_m}")
        if not np.isfinite(self.bid_lower) or not np.isfinite(self.bid_upper):
            raise BidModelError("bid bounds must be finite")
        if self.bid_lower > self.bid_upper:
            raise BidModelError("bid_lower exceeds bid_upper")

    @classmethod
    def for_minima(
        cls,
        minima: np.ndarray,
        epsilon: float,
        theta: float,
        bid_lower: float = 0.0,
        bid_upper: float | None = None,
        big_m: float | None = None,
    ) -> "RobustnessParams":
        """Fill bid_upper and big_m defaults from the sample minima."""
        minima = np.asarray(minima, dtype=float)
        if bid_upper is None:
            bid_upper = default_bid_upper(minima)
        if big_m is None:
            big_m = default_big_m(minima, epsilon, theta, bid_lower, bid_upper)
        return cls(
            epsilon=epsilon,
            theta=theta,
            big_m=big_m,
            bid_lower=bid_lower,
            bid_upper=bid_upper,
        )


@dataclass
class PriceCurve:
    """24 nonnegative hourly reserve prices (currency per kW)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (24,):
            raise BidModelError("a price curve carries exactly 24 hourly prices")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0.0):
            raise BidModelError("prices must be finite and nonnegative")

    @classmethod
    def flat(cls, level: float = 1.0) -> "PriceCurve":
        return cls(values=np.full(24, float(level)))


@dataclass
class BidSchedule:
    """Optimal hourly bids with the certificate behind them.

    flags/slacks/threshold reproduce the solver's availability
    certificate; node_count counts branch-and-bound relaxations.
    """

    bids: np.ndarray
    objective: float
    epsilon: float
    theta: float
    big_m: float
    bid_lower: float
    bid_upper: float
    prices: np.ndarray
    flags: np.ndarray
    slacks: np.ndarray
    threshold: float
    node_count: int
    wall_time: float = 0.0

    def to_json_dict(self) -> dict:
        # wall_time is intentionally left out: serialized schedules must
        # be byte-identical across reruns of the same configuration.
        return {
            "bids_kw": [float(v) for v in self.bids],
            "objective": float(self.objective),
            "epsilon": float(self.epsilon),
            "theta": float(self.theta),
            "big_m": float(self.big_m),
            "bid_lower": float(self.bid_lower),
            "bid_upper": float(self.bid_upper),
            "prices": [float(v) for v in self.prices],
            "certificate": {
                "sample_flags": [int(v) for v in self.flags],
                "sample_slacks": [float(v) for v in self.slacks],
                "threshold": float(self.threshold),
            },
            "node_count": int(self.node_count),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BidSchedule":
        cert = data["certificate"]
        return cls(
            bids=np.array(data["bids_kw"], dtype=float),
            objective=float(data["objective"]),
            epsilon=float(data["epsilon"]),
            theta=float(data["theta"]),
            big_m=float(data["big_m"]),
            bid_lower=float(data["bid_lower"]),
            bid_upper=float(data["bid_upper"]),
            prices=np.array(data["prices"], dtype=float),
            flags=np.array(cert["sample_flags"], dtype=int),
            slacks=np.array(cert["sample_slacks"], dtype=float),
            threshold=float(cert["threshold"]),
            node_count=int(data["node_count"]),
        )

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "BidSchedule":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def save_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("hour,bid_kw\n")
            for h, v in enumerate(self.bids):
                fh.write(f"{h},{v:.10g}\n")


def default_bid_upper(minima: np.ndarray) -> float:
    """Largest hourly sample minimum: no larger bid can ever be safe."""
    return float(np.max(minima))


def default_big_m(
    minima: np.ndarray,
    epsilon: float,
    theta: float,
    bid_lower: float,
    bid_upper: float,
) -> float:
    """Deactivation constant sized to the data and the budget row."""
    minima = np.asarray(minima, dtype=float)
    spread = float(np.max(minima) - np.min(minima))
    box = float(bid_upper - bid_lower)
    budget = theta * minima.shape[0] / epsilon
    return max(spread + box + budget, 1.0)


def _as_minima(samples) -> np.ndarray:
    """Accept a SampleSet-like object or a raw (N, H) array."""
    minima = getattr(samples, "hourly_minima", samples)
    minima = np.atleast_2d(np.asarray(minima, dtype=float))
    if minima.ndim != 2 or minima.size == 0:
        raise BidModelError("sample minima must form a nonempty (N, H) array")
    if not np.all(np.isfinite(minima)) or np.any(minima < 0.0):
        raise BidModelError("sample minima must be finite and nonnegative")
    return minima


def _as_prices(prices, n_hours: int) -> np.ndarray:
    values = getattr(prices, "values", prices)
    values = np.asarray(values, dtype=float)
    if values.shape != (n_hours,):
        raise BidModelError(
            f"need one price per hour: expected {n_hours}, got {values.shape}"
        )
    if not np.all(np.isfinite(values)) or np.any(values < 0.0):
        raise BidModelError("prices must be finite and nonnegative")
    return values


def _threshold_cap(minima: np.ndarray, params: RobustnessParams) -> float:
    """Loss-free upper bound on the threshold variable.

    Any feasible point with a larger t maps to one with t and every s_i
    reduced in lockstep at equal objective, so capping t preserves the
    optimum while keeping the relaxation bounded.
    """
    t_floor = params.theta / params.epsilon
    return t_floor + max(0.0, float(np.max(minima)) - params.bid_lower) + 1.0


def _row_coefficient(value: float, params: RobustnessParams) -> float:
    """Flag coefficient for one availability row.

    A flagged sample already carries s_i >= t through its deactivation
    row, so the availability row only ever needs the bid-box headroom
    above the observed value; anything larger weakens the relaxation
    without admitting new integer points.
    """
    return min(params.big_m, max(0.0, params.bid_upper - value))


def _hour_caps(minima: np.ndarray, params: RobustnessParams, t_cap: float) -> np.ndarray:
    """Valid per-hour upper bounds on the bid when theta > 0.

    With k samples flagged, every unflagged sample i bounds the hour-h
    bid by B[i][h] + s_i - t, each flagged sample consumes t of slack
    through its deactivation row, and the budget row leaves the unflagged
    slacks at most (eps*N - k)*t - theta*N.  The best case for a given k
    removes the k smallest column values and water-fills the rest;
    lifting the water line pays for itself only while fewer than
    eps*N - k samples sit below it, so an ascending scan per k finds the
    exact cap and the hour takes the best k in 0..ceil(eps*N)-1.
    """
    n, h = minima.shape
    eps_n = params.epsilon * n
    k_max = math.ceil(eps_n - 1e-9) - 1
    caps = np.empty(h)
    for hour in range(h):
        col = np.sort(minima[:, hour])
        best = -np.inf
        for k in range(k_max + 1):
            rate = eps_n - k
            max_budget = rate * t_cap - params.theta * n
            if max_budget < 0.0:
                continue
            t_low = params.theta * n / rate
            vals = col[k:]
            level = vals[0]
            cost = 0.0
            best = max(best, level - t_low)
            for j in range(1, vals.size):
                if j >= rate:
                    break
                room = vals[j] - level
                afford = max(0.0, (max_budget - cost) / j)
                seg = min(room, afford)
                level += seg
                cost += j * seg
                t_need = max(t_low, (cost + params.theta * n) / rate)
                best = max(best, level - t_need)
                if seg < room:
                    break
        caps[hour] = min(params.bid_upper, max(best, params.bid_lower))
    return caps


def _assemble(
    minima: np.ndarray,
    row_blocks: list[tuple[np.ndarray, np.ndarray]],
    prices: np.ndarray,
    params: RobustnessParams,
    sample_keys: np.ndarray | None = None,
) -> MilpModel:
    """Shared variable layout: bids, threshold, slacks, flags."""
    n, h = minima.shape
    n_vars = h + 1 + n + n
    i_t = h
    i_s = h + 1
    i_q = h + 1 + n

    objective = np.zeros(n_vars)
    objective[:h] = prices

    rows = []
    senses = []
    rhs = []
    tags = []

    # Budget row: eps*N*t - sum s >= theta*N.
    budget = np.zeros(n_vars)
    budget[i_t] = params.epsilon * n
    budget[i_s : i_s + n] = -1.0
    rows.append(budget)
    senses.append(">=")
    rhs.append(params.theta * n)
    tags.append("budget")

    for block, block_rhs in row_blocks:
        rows.extend(block)
        senses.extend([">="] * len(block_rhs))
        rhs.extend(block_rhs)
        tags.extend(["availability"] * len(block_rhs))

    # Deactivation link: c*(1 - q_i) >= t - s_i.  The threshold cap bounds
    # t - s_i from above, so c never usefully exceeds it.
    t_cap = _threshold_cap(minima, params)
    c_d = min(params.big_m, t_cap)
    for i in range(n):
        row = np.zeros(n_vars)
        row[i_t] = -1.0
        row[i_s + i] = 1.0
        row[i_q + i] = -c_d
        rows.append(row)
        senses.append(">=")
        rhs.append(-c_d)
        tags.append("deactivation")

    if params.theta > 0.0:
        # The budget row forces t*(eps*N - k) >= theta*N > 0 for k flagged
        # samples, hence k < eps*N; stated as a row it prunes flag-heavy
        # subtrees that the relaxation would otherwise explore.
        k_max = math.ceil(params.epsilon * n - 1e-9) - 1
        card = np.zeros(n_vars)
        card[i_q : i_q + n] = 1.0
        rows.append(card)
        senses.append("<=")
        rhs.append(float(k_max))
        tags.append("cardinality")

        # Star rows: walking hour h's samples by ascending value, the
        # first unflagged one bounds the bid, so telescoping the value
        # gaps over the flags and adding the slack mass of the walked
        # prefix stays valid for every flag pattern:
        #   p_h + t <= b_(1) + sum_j (b_(j+1)-b_(j)) q_(j) + sum_j s_(j).
        # These pull the relaxation close to the integer hull when
        # flags, not slacks, do the work.
        depth = min(k_max + 1, n)
        for hour in range(h):
            order = np.argsort(minima[:, hour], kind="stable")
            row = np.zeros(n_vars)
            row[hour] = -1.0
            row[i_t] = -1.0
            for j in range(depth):
                row[i_s + order[j]] = 1.0
                if j + 1 < n:
                    gap = minima[order[j + 1], hour] - minima[order[j], hour]
                    if j < k_max:
                        row[i_q + order[j]] = gap
            rows.append(row)
            senses.append(">=")
            rhs.append(-float(minima[order[0], hour]))
            tags.append("star")

    # Bootstrap sample sets repeat whole days verbatim; flags of identical
    # samples are interchangeable, so pinning them to a fixed order
    # removes permutation symmetry the search would otherwise enumerate.
    if sample_keys is not None:
        _, inverse = np.unique(sample_keys, axis=0, return_inverse=True)
        for group in range(int(inverse.max()) + 1):
            members = np.flatnonzero(inverse == group)
            for a, b in zip(members[:-1], members[1:]):
                row = np.zeros(n_vars)
                row[i_q + a] = 1.0
                row[i_q + b] = -1.0
                rows.append(row)
                senses.append(">=")
                rhs.append(0.0)
                tags.append("ordering")

    lower = np.zeros(n_vars)
    upper = np.full(n_vars, np.inf)
    lower[:h] = params.bid_lower
    upper[:h] = _hour_caps(minima, params, t_cap) if params.theta > 0 else params.bid_upper
    # Any feasible point has t >= theta/eps (budget row with s >= 0).
    t_floor = params.theta / params.epsilon
    lower[i_t] = t_floor
    upper[i_t] = t_cap
    upper[i_q : i_q + n] = 1.0

    coeffs = np.array(rows)
    rhs_arr = np.array(rhs, dtype=float)

    # Availability rows are numerous and mostly slack at any optimum, so
    # they are handed to the solver lazily; each sample's few smallest
    # values stay active as seeds to keep early relaxations honest.
    lazy = np.zeros(len(tags), dtype=bool)
    avail = np.flatnonzero(np.array(tags) == "availability")
    if avail.size > n * _SEED_ROWS:
        lazy[avail] = True
        slack_cols = coeffs[np.ix_(avail, np.arange(i_s, i_s + n))]
        sample_of_row = np.argmax(slack_cols == 1.0, axis=1)
        values = -rhs_arr[avail]
        for i in range(n):
            mask = sample_of_row == i
            mine = avail[mask]
            order = np.argsort(values[mask], kind="stable")
            lazy[mine[order[:_SEED_ROWS]]] = False

    names = (
        [f"bid_h{j}" for j in range(h)]
        + ["threshold"]
        + [f"slack_{i}" for i in range(n)]
        + [f"flag_{i}" for i in range(n)]
    )
    lp = LpModel(
        objective=objective,
        row_coeffs=coeffs,
        row_senses=senses,
        row_rhs=rhs_arr,
        lower=lower,
        upper=upper,
        names=names,
    )
    return MilpModel(
        lp=lp,
        binary_idx=np.arange(i_q, i_q + n),
        row_tags=tags,
        lazy_rows=lazy if bool(lazy.any()) else None,
    )


def build_capacity_model(samples, prices, params: RobustnessParams) -> MilpModel:
    """Availability-constrained bid model from hourly sample minima."""
    minima = _as_minima(samples)
    n, h = minima.shape
    price_vec = _as_prices(prices, h)
    n_vars = h + 1 + n + n
    i_t, i_s, i_q = h, h + 1, h + 1 + n

    t_cap = _threshold_cap(minima, params)
    rows = []
    rhs = []
    for i in range(n):
        for hour in range(h):
            value = minima[i, hour]
            if value >= params.bid_upper + t_cap:
                # s_i >= t + bid - value can never bind inside the box.
                continue
            row = np.zeros(n_vars)
            row[hour] = -1.0
            row[i_t] = -1.0
            row[i_s + i] = 1.0
            row[i_q + i] = _row_coefficient(value, params)
            rows.append(row)
            rhs.append(-value)
    block = np.array(rows) if rows else np.zeros((0, n_vars))
    return _assemble(
        minima, [(block, np.array(rhs))], price_vec, params, sample_keys=minima
    )


def build_capacity_model_from_minutes(
    profiles, prices, params: RobustnessParams
) -> MilpModel:
    """Same model, one availability row per sample minute.

    Exactly equivalent to the hourly-minima build: an hour's rows are
    jointly as tight as the row of its minimum minute.
    """
    profiles = np.atleast_2d(np.asarray(profiles, dtype=float))
    n, n_min = profiles.shape
    if n_min % 60 != 0:
        raise BidModelError("minute profiles must cover whole hours")
    h = n_min // 60
    minima = profiles.reshape(n, h, 60).min(axis=2)
    price_vec = _as_prices(prices, h)
    n_vars = h + 1 + n + n
    i_t, i_s, i_q = h, h + 1, h + 1 + n

    t_cap = _threshold_cap(minima, params)
    rows = []
    rhs = []
    for i in range(n):
        for m in range(n_min):
            value = profiles[i, m]
            if value >= params.bid_upper + t_cap:
                continue
            row = np.zeros(n_vars)
            row[m // 60] = -1.0
            row[i_t] = -1.0
            row[i_s + i] = 1.0
            row[i_q + i] = _row_coefficient(value, params)
            rows.append(row)
            rhs.append(-value)
    block = np.array(rows) if rows else np.zeros((0, n_vars))
    return _assemble(
        minima, [(block, np.array(rhs))], price_vec, params, sample_keys=profiles
    )


def _infeasibility_reason(minima: np.ndarray, params: RobustnessParams) -> str:
    """Explain why no schedule exists, in terms of the budget vs the data."""
    n = minima.shape[0]
    eps, theta = params.epsilon, params.theta
    t_floor = theta / eps
    # Cheapest feasibility route bids bid_lower everywhere; sample i then
    # tolerates threshold t at slack cost max(0, t - headroom_i).
    headroom = np.sort(minima.min(axis=1) - params.bid_lower)
    best = -np.inf
    for t in np.concatenate([[t_floor], headroom[headroom >= t_floor]]):
        value = eps * n * t - float(np.sum(np.maximum(0.0, t - headroom)))
        best = max(best, value)
    need = theta * n
    return (
        f"radius theta={theta:g} kW with epsilon={eps:g} requires threshold "
        f"t >= {t_floor:g} kW, but the sample day minima leave at most "
        f"{best:g} kW of budget against the required {need:g} kW; lower "
        f"theta, raise epsilon, or relax bid_lower"
    )


def optimize_bids(samples, prices, params: RobustnessParams) -> BidSchedule:
    """Solve the bid model to global optimality.

    Raises InfeasibleBidModel (with a data-driven reason) or
    UnboundedBidModel instead of returning degenerate schedules.
    """
    minima = _as_minima(samples)
    model = build_capacity_model(minima, prices, params)
    sol = solve_milp(model)
    if sol.status == "infeasible":
        raise InfeasibleBidModel(_infeasibility_reason(minima, params))
    if sol.status == "unbounded":
        raise UnboundedBidModel("bid model unbounded; check bid_upper")
    return _package(minima, model, sol, params)


def reference_bids(samples, prices, params: RobustnessParams) -> BidSchedule:
    """Exhaustive-enumeration twin of optimize_bids, for cross-checks."""
    minima = _as_minima(samples)
    model = build_capacity_model(minima, prices, params)
    sol = brute_force_reference(model)
    if sol.status == "infeasible":
        raise InfeasibleBidModel(_infeasibility_reason(minima, params))
    if sol.status == "unbounded":
        raise UnboundedBidModel("bid model unbounded; check bid_upper")
    return _package(minima, model, sol, params)


def _package(
    minima: np.ndarray,
    model: MilpModel,
    sol: MilpSolution,
    params: RobustnessParams,
) -> BidSchedule:
    n, h = minima.shape
    x = sol.x
    bids = x[:h].copy()
    threshold = float(x[h])
    slacks = x[h + 1 : h + 1 + n].copy()
    flags = np.round(x[h + 1 + n : h + 1 + 2 * n]).astype(int)
    prices = model.lp.objective[:h].copy()

    schedule = BidSchedule(
        bids=bids,
        objective=float(sol.objective),
        epsilon=params.epsilon,
        theta=params.theta,
        big_m=params.big_m,
        bid_lower=params.bid_lower,
        bid_upper=params.bid_upper,
        prices=prices,
        flags=flags,
        slacks=slacks,
        threshold=threshold,
        node_count=sol.node_count,
        wall_time=sol.wall_time,
    )
    worst = certificate_violation(schedule, minima)
    if worst > CERT_TOL:
        raise ArithmeticError(
            f"certificate violates a model row by {worst:.3e} kW"
        )
    return schedule


def certificate_violation(schedule: BidSchedule, samples) -> float:
    """Largest constraint-row violation of the schedule's certificate (kW)."""
    minima = _as_minima(samples)
    n, h = minima.shape
    eps, theta, m_big = schedule.epsilon, schedule.theta, schedule.big_m
    t, s, q = schedule.threshold, schedule.slacks, schedule.flags
    worst = theta * n - (eps * n * t - float(np.sum(s)))
    # Availability rows: B - bid + M*q >= t - s.
    lhs = minima - schedule.bids[np.newaxis, :] + m_big * q[:, np.newaxis]
    worst = max(worst, float(np.max((t - s[:, np.newaxis]) - lhs)))
    # Deactivation rows.
    worst = max(worst, float(np.max((t - s) - m_big * (1 - q))))
    worst = max(worst, float(np.max(schedule.bids - schedule.bid_upper)))
    worst = max(worst, float(np.max(schedule.bid_lower - schedule.bids)))
    worst = max(worst, float(np.max(-s, initial=-np.inf)))
    return worst


def smallest_feasible_theta(
    samples,
    prices,
    theta_grid,
    epsilon: float,
    bid_lower: float = 0.0,
    bid_upper: float | None = None,
    big_m: float | None = None,
) -> tuple[float, BidSchedule]:
    """First theta on the ascending grid that admits a schedule.

    Raises InfeasibleBidModel with the per-theta reasons when the whole
    grid is infeasible.
    """
    minima = _as_minima(samples)
    grid = sorted({float(t) for t in np.asarray(theta_grid, dtype=float)})
    if not grid:
        raise BidModelError("theta grid is empty")
    reasons = []
    for theta in grid:
        params = RobustnessParams.for_minima(
            minima,
            epsilon=epsilon,
            theta=theta,
            bid_lower=bid_lower,
            bid_upper=bid_upper,
            big_m=big_m,
        )
        try:
            schedule = optimize_bids(minima, prices, params)
        except InfeasibleBidModel as exc:
            reasons.append(f"theta={theta:g}: {exc.reason}")
            continue
        return theta, schedule
    raise InfeasibleBidModel(
        "no grid point is feasible: " + "; ".join(reasons)
    )
