"""Branch-and-bound for mixed-binary programs over the bundled LP solver.

Branches on the most fractional binary (lowest index on ties) and
explores depth-first, backtracking to the open node with the best
relaxation bound.  A separate exhaustive reference solver enumerates
every binary assignment for cross-checking on small instances.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from .lp import (
    REPORT_TOL,
    LpModel,
    LpModelError,
    LpSolution,
    _AT_LOWER,
    _AT_UPPER,
    _Simplex,
    _standardize,
    solve_lp,
)

# A binary value within this distance of 0 or 1 counts as integral.
INT_TOL = 1e-6
# Nodes whose relaxation bound cannot beat the incumbent by more than
# this margin are pruned; the returned objective is optimal within it.
GAP_TOL = 1e-9

_BRUTE_FORCE_LIMIT = 20


@dataclass
class MilpModel:
    """A maximization LP plus indices of variables restricted to {0, 1}.

    row_tags optionally labels each row with an opaque string; solvers
    ignore the labels, callers may use them to address row subsets.
    lazy_rows optionally marks rows the solver may keep inactive until a
    trial solution violates them; every returned solution satisfies all
    rows regardless.
    """

    lp: LpModel
    binary_idx: np.ndarray
    row_tags: list[str] | None = None
    lazy_rows: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.binary_idx = np.asarray(self.binary_idx, dtype=int)
        if self.lazy_rows is not None:
            self.lazy_rows = np.asarray(self.lazy_rows, dtype=bool)

    def validate(self) -> None:
        self.lp.validate()
        idx = self.binary_idx
        if idx.size != np.unique(idx).size:
            raise LpModelError("duplicate binary index")
        if idx.size and (idx.min() < 0 or idx.max() >= self.lp.n_vars):
            raise LpModelError("binary index out of range")
        if idx.size:
            lo, hi = self.lp.lower[idx], self.lp.upper[idx]
            if np.any(lo < -INT_TOL) or np.any(hi > 1.0 + INT_TOL):
                raise LpModelError("binary variables must be box-bounded [0, 1]")
        if self.row_tags is not None and len(self.row_tags) != self.lp.n_rows:
            raise LpModelError("row_tags length must match the row count")
        if self.lazy_rows is not None and self.lazy_rows.size != self.lp.n_rows:
            raise LpModelError("lazy_rows length must match the row count")


@dataclass
class MilpSolution:
    """Outcome of a mixed-binary solve.

    status is "optimal", "infeasible" or "unbounded"; node_count is the
    number of branch-and-bound nodes expanded (rounding probes solve
    additional LPs that are not counted).
    """

    status: str
    objective: float | None = None
    x: np.ndarray | None = None
    node_count: int = 0
    wall_time: float = 0.0


def _slice_lp(
    model: MilpModel, lower: np.ndarray, upper: np.ndarray, active: np.ndarray | None
) -> LpModel:
    lp = model.lp
    if active is None:
        rows, senses, rhs = lp.row_coeffs, lp.row_senses, lp.row_rhs
    else:
        idx = np.flatnonzero(active)
        rows = lp.row_coeffs[idx]
        senses = [lp.row_senses[int(k)] for k in idx]
        rhs = lp.row_rhs[idx]
    return LpModel(
        objective=lp.objective,
        row_coeffs=rows,
        row_senses=senses,
        row_rhs=rhs,
        lower=lower,
        upper=upper,
    )


def _violated(lp: LpModel, x: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Indices among idx whose row is violated at x."""
    res = lp.row_coeffs[idx] @ x - lp.row_rhs[idx]
    out = np.zeros(idx.size, dtype=bool)
    for pos, k in enumerate(idx):
        sense = lp.row_senses[int(k)]
        if sense == ">=":
            out[pos] = res[pos] < -1e-9
        elif sense == "<=":
            out[pos] = res[pos] > 1e-9
        else:
            out[pos] = abs(res[pos]) > 1e-9
    return idx[out]


def _relaxation(
    model: MilpModel,
    lower: np.ndarray,
    upper: np.ndarray,
    active: np.ndarray | None = None,
) -> LpSolution:
    """Solve one node LP exactly.

    With an activity mask, rows marked lazy stay out of the tableau until
    a trial optimum violates them; activation is recorded in the shared
    mask so every later node starts from the accumulated row set.  The
    returned solution always satisfies the full row system.
    """
    if active is None:
        return solve_lp(_slice_lp(model, lower, upper, None))
    while True:
        sol = solve_lp(_slice_lp(model, lower, upper, active))
        if sol.status == "infeasible":
            # A row subset only relaxes the model, so emptiness carries.
            return sol
        if sol.status == "unbounded":
            if bool(np.all(active)):
                return sol
            active[:] = True
            continue
        inactive = np.flatnonzero(~active)
        if inactive.size == 0:
            return sol
        hits = _violated(model.lp, sol.x, inactive)
        if hits.size == 0:
            return sol
        active[hits] = True


class _NodeEngine:
    """Warm-started node relaxations over a frozen row subset.

    Standardizes the sliced LP once at root bounds, solves it cold, and
    then keeps the one simplex tableau alive across nodes.  Jumping to
    another node only moves variable bounds: nonbasic columns resting on
    a moved bound shift the basic values by a rank-one update, and dual
    simplex pivots repair whatever feasibility that breaks.  No
    refactorization is needed on the happy path.  Any exit that is not
    provably exact marks the tableau dirty and returns None so the
    caller falls back to the cold path; the next warm call starts with a
    refactorization.
    """

    def __init__(self, model: MilpModel, active: np.ndarray | None):
        lp = model.lp
        self.n_vars = lp.n_vars
        self.shift = lp.lower.copy()
        self.objective = lp.objective
        self.usable = bool(np.all(np.isfinite(lp.lower)))
        self.root_infeasible = False
        self._dirty = False
        # Saved states are only meaningful against the row set they were
        # taken from; the active-row count identifies it.
        self.gen = int(active.sum()) if active is not None else -1
        if not self.usable:
            return
        std = _standardize(_slice_lp(model, lp.lower, lp.upper, active))
        sx = _Simplex(std)
        self.sx = sx
        self.cost = np.concatenate([std.cost, np.zeros(len(sx.artificials))])
        if not sx.phase_one():
            self.root_infeasible = True
            return
        if sx.run(self.cost) != "optimal" or self._extract() is None:
            self.usable = False
            return
        # The root optimum is dual feasible under any later bounds, so it
        # doubles as the recovery point when the live state goes bad.
        self.root_basis = sx.basis.copy()
        self.root_status = sx.status.copy()

    def _extract(self) -> LpSolution | None:
        sx = self.sx
        y = sx.values()
        tol = 1e-8 * (1.0 + float(np.max(np.abs(sx.b0), initial=0.0)))
        if float(np.max(np.abs(sx.A0 @ y - sx.b0), initial=0.0)) > tol:
            return None
        if np.any(y < sx.lb - tol):
            return None
        fin = np.isfinite(sx.ub)
        if np.any(y[fin] > sx.ub[fin] + tol):
            return None
        x = self.shift + y[: self.n_vars]
        return LpSolution(
            status="optimal",
            objective=float(self.objective @ x),
            x=x,
            iterations=sx.iterations,
        )

    def solve(
        self, lower: np.ndarray, upper: np.ndarray, state: tuple | None = None
    ) -> LpSolution | None:
        if self.root_infeasible:
            # Node bounds only ever tighten the root box.
            return LpSolution(status="infeasible")
        sx = self.sx
        if self._dirty:
            # Whatever soured the tableau may have left resting sides that
            # no longer match the prices; restart from the root optimum.
            sx.basis = self.root_basis.copy()
            sx.status = self.root_status.copy()
            if not sx._refactor():
                return None
            self._dirty = False
        n = self.n_vars
        new_lb = lower - self.shift
        hi = upper - self.shift
        new_ub = np.where(np.isfinite(hi), hi, np.inf)
        far = int(
            np.count_nonzero(sx.lb[:n] != new_lb)
            + np.count_nonzero(sx.ub[:n] != new_ub)
        )
        if state is not None and state[0] == self.gen and far > 12:
            # The saved parent basis is a few bound moves from this node.
            # When the live tableau sits a whole subtree away, one rebuild
            # beats repairing that distance pivot by pivot; for short hops
            # the rank-one jump below wins, so the rebuild is gated on
            # how many bounds actually differ.
            sx.lb[: n] = new_lb
            sx.ub[: n] = new_ub
            sx.basis = state[1].copy()
            sx.status = state[2].copy()
            if not sx._refactor():
                self._dirty = True
                return None
        else:
            cur_lb = sx.lb[:n]
            cur_ub = sx.ub[:n]
            stat = sx.status[:n]
            # A nonbasic column rests on its bound, so moving that bound
            # moves the column's value and with it every basic value.
            delta = np.zeros(n)
            at_lo = stat == _AT_LOWER
            at_up = stat == _AT_UPPER
            delta[at_lo] = new_lb[at_lo] - cur_lb[at_lo]
            delta[at_up] = new_ub[at_up] - cur_ub[at_up]
            moved = np.flatnonzero(delta)
            if moved.size:
                if not np.all(np.isfinite(delta[moved])):
                    return None
                sx.xB -= sx.T[:, moved] @ delta[moved]
                sx._since_refactor += 1
            cur_lb[:] = new_lb
            cur_ub[:] = new_ub
        outcome = sx.run_dual(self.cost)
        if outcome == "fallback":
            self._dirty = True
            return None
        if outcome == "infeasible":
            return LpSolution(status="infeasible", iterations=sx.iterations)
        if sx.run(self.cost) != "optimal":
            self._dirty = True
            return None
        sol = self._extract()
        if sol is None:
            self._dirty = True
        return sol


def solve_milp(model: MilpModel) -> MilpSolution:
    """Solve to global optimality by LP-based branch-and-bound."""
    t0 = time.perf_counter()
    model.validate()
    bin_idx = model.binary_idx

    # Lazy rows start inactive and come in only when a node optimum
    # violates them; the mask is shared by all nodes, so each discovered
    # row stays in every subsequent tableau.  Node bounds remain exact
    # because every node keeps activating until no violation is left.
    active: np.ndarray | None = None
    if model.lazy_rows is not None and bool(np.any(model.lazy_rows)):
        active = ~model.lazy_rows

    engine: _NodeEngine | None = None
    warm_ok = bool(np.all(np.isfinite(model.lp.lower)))

    def node_solve(
        lower: np.ndarray, upper: np.ndarray, state: tuple | None = None
    ) -> tuple[LpSolution, bool]:
        """Exact node relaxation; lazy rows end satisfied either way.

        The flag reports whether the answer came off the warm tableau,
        whose certificates carry warm-start tolerances.
        """
        nonlocal engine
        while True:
            sol = None
            if warm_ok:
                if engine is None:
                    engine = _NodeEngine(model, active)
                if engine.usable or engine.root_infeasible:
                    sol = engine.solve(lower, upper, state)
            if sol is None:
                return _relaxation(model, lower, upper, active), False
            if sol.status != "optimal" or active is None:
                return sol, True
            inactive = np.flatnonzero(~active)
            if inactive.size == 0:
                return sol, True
            hits = _violated(model.lp, sol.x, inactive)
            if hits.size == 0:
                return sol, True
            active[hits] = True
            engine = None
            state = None

    def pin_down(
        lower: np.ndarray, upper: np.ndarray, frac_x: np.ndarray
    ) -> LpSolution:
        """Cold, exact resolve with every binary fixed at its rounding.

        Incumbents always come from here, so the returned certificate
        never inherits warm-start tolerances.
        """
        lo2, up2 = lower.copy(), upper.copy()
        if bin_idx.size:
            v = np.clip(np.round(frac_x[bin_idx]), lower[bin_idx], upper[bin_idx])
            lo2[bin_idx] = v
            up2[bin_idx] = v
        return _relaxation(model, lo2, up2, active)

    # Open nodes live on a stack, so the search is depth-first: after each
    # take the loop dives, solving the preferred child immediately (a
    # one-variable move the warm tableau repairs in a few pivots) while
    # only the sibling goes onto the stack.  Siblings get taken right
    # after their brother's subtree closes, which keeps every jump within
    # a few bound changes of the live tableau.  Dives end at leaves, so
    # incumbents show up early and the parent-bound prune below recovers
    # most of what a best-bound order would skip.
    pool: list[
        tuple[float, np.ndarray, np.ndarray, tuple | None, tuple | None]
    ] = []
    # The root bound is unknown before its first solve: treat as +inf.
    pool.append(
        (np.inf, model.lp.lower.copy(), model.lp.upper.copy(), None, None)
    )

    # Pseudocosts: observed bound drop per unit of fractional distance,
    # kept per binary and per fix direction.  Entries with no history
    # borrow the direction's running average, which makes the very first
    # picks coincide with most-fractional branching.
    pc_sum = np.zeros((2, bin_idx.size))
    pc_cnt = np.zeros((2, bin_idx.size))

    incumbent_obj: float | None = None
    incumbent_x: np.ndarray | None = None
    node_count = 0
    root = True

    while pool:
        bound, lower, upper, state, origin = pool.pop()
        if incumbent_obj is not None and bound <= incumbent_obj + GAP_TOL:
            continue
        while True:
            sol, warm = node_solve(lower, upper, state)
            state = None
            node_count += 1
            if sol.status == "unbounded":
                # An unbounded relaxation at the root means no finite
                # optimum can be certified for the binary problem either.
                if root:
                    return MilpSolution(
                        status="unbounded",
                        node_count=node_count,
                        wall_time=time.perf_counter() - t0,
                    )
                raise ArithmeticError(
                    "child relaxation unbounded below a bounded root"
                )
            root = False
            if sol.status == "infeasible":
                break
            if origin is not None:
                pos, direction, parent_obj, dist = origin
                drop = max(parent_obj - sol.objective, 0.0)
                pc_sum[direction, pos] += drop / dist
                pc_cnt[direction, pos] += 1.0
                origin = None
            if incumbent_obj is not None and sol.objective <= incumbent_obj + GAP_TOL:
                break

            vals = sol.x[bin_idx] if bin_idx.size else np.empty(0)
            frac = np.abs(vals - np.round(vals))
            if not bin_idx.size or np.max(frac, initial=0.0) <= INT_TOL:
                if not warm:
                    if incumbent_obj is None or sol.objective > incumbent_obj:
                        incumbent_obj = sol.objective
                        incumbent_x = sol.x
                else:
                    exact = pin_down(lower, upper, sol.x)
                    if exact.status == "optimal" and (
                        incumbent_obj is None
                        or exact.objective > incumbent_obj + GAP_TOL
                    ):
                        incumbent_obj = exact.objective
                        incumbent_x = exact.x
                break

            # Product rule over the estimated bound drops of both children;
            # ties fall to the lowest position so reruns stay deterministic.
            cand = np.flatnonzero(frac > INT_TOL)
            f = vals[cand]
            tot_sum = pc_sum.sum(axis=1)
            tot_cnt = pc_cnt.sum(axis=1)
            fill = np.where(tot_cnt > 0, tot_sum / np.maximum(tot_cnt, 1.0), 1.0)
            unit = np.where(
                pc_cnt[:, cand] > 0,
                pc_sum[:, cand] / np.maximum(pc_cnt[:, cand], 1.0),
                fill[:, None],
            )
            est_dn = unit[0] * f
            est_up = unit[1] * (1.0 - f)
            score = np.maximum(est_dn, 1e-12) * np.maximum(est_up, 1e-12)
            top = float(np.max(score))
            rel = int(np.flatnonzero(score >= top * (1.0 - 1e-12))[0])
            pos = int(cand[rel])
            var = int(bin_idx[pos])
            # Dive toward the cheaper child; round when estimates tie.
            if abs(est_up[rel] - est_dn[rel]) <= 1e-12:
                value = 1.0 if vals[pos] >= 0.5 else 0.0
            else:
                value = 1.0 if est_up[rel] < est_dn[rel] else 0.0
            dist_dn = max(float(vals[pos]), 1e-6)
            dist_up = max(1.0 - float(vals[pos]), 1e-6)

            lo2, up2 = lower.copy(), upper.copy()
            lo2[var] = 1.0 - value
            up2[var] = 1.0 - value
            sib_state = None
            if warm and engine is not None and engine.usable:
                sib_state = (
                    engine.gen,
                    engine.sx.basis.copy(),
                    engine.sx.status.copy(),
                )
            sib_origin = (
                pos,
                int(1.0 - value),
                sol.objective,
                dist_up if value == 0.0 else dist_dn,
            )
            pool.append((sol.objective, lo2, up2, sib_state, sib_origin))

            # Dive into the preferred child in place.
            origin = (
                pos,
                int(value),
                sol.objective,
                dist_up if value == 1.0 else dist_dn,
            )
            lower = lower.copy()
            upper = upper.copy()
            lower[var] = value
            upper[var] = value

    elapsed = time.perf_counter() - t0
    if incumbent_obj is None:
        return MilpSolution(status="infeasible", node_count=node_count, wall_time=elapsed)
    return MilpSolution(
        status="optimal",
        objective=incumbent_obj,
        x=incumbent_x,
        node_count=node_count,
        wall_time=elapsed,
    )


def brute_force_reference(model: MilpModel) -> MilpSolution:
    """Exhaustively enumerate binary assignments and solve each LP.

    Ground truth for small instances; ties go to the lexicographically
    smallest binary vector.  Refuses more than 20 binaries.
    """
    t0 = time.perf_counter()
    model.validate()
    bin_idx = model.binary_idx
    if bin_idx.size > _BRUTE_FORCE_LIMIT:
        raise ValueError(
            f"{bin_idx.size} binaries exceed the enumeration limit "
            f"of {_BRUTE_FORCE_LIMIT}"
        )

    best_obj: float | None = None
    best_x: np.ndarray | None = None
    solved = 0
    for assignment in itertools.product((0.0, 1.0), repeat=bin_idx.size):
        lower = model.lp.lower.copy()
        upper = model.lp.upper.copy()
        lower[bin_idx] = assignment
        upper[bin_idx] = assignment
        sol = _relaxation(model, lower, upper)
        solved += 1
        if sol.status == "unbounded":
            return MilpSolution(
                status="unbounded",
                node_count=solved,
                wall_time=time.perf_counter() - t0,
            )
        if sol.status != "optimal":
            continue
        # Strictly-better updates keep the first (lex smallest) assignment
        # among objective ties.
        if best_obj is None or sol.objective > best_obj + 1e-9:
            best_obj = sol.objective
            best_x = sol.x

    elapsed = time.perf_counter() - t0
    if best_obj is None:
        return MilpSolution(status="infeasible", node_count=solved, wall_time=elapsed)
    return MilpSolution(
        status="optimal",
        objective=best_obj,
        x=best_x,
        node_count=solved,
        wall_time=elapsed,
    )
