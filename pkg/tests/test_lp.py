"""Tests for the dense primal simplex solver."""

import itertools

import numpy as np
import pytest

from flexbid.lp import LpModel, LpModelError, format_model, solve_lp


def make_model(c, rows, senses, rhs, lower, upper):
    return LpModel(
        objective=np.array(c, dtype=float),
        row_coeffs=np.array(rows, dtype=float),
        row_senses=list(senses),
        row_rhs=np.array(rhs, dtype=float),
        lower=np.array(lower, dtype=float),
        upper=np.array(upper, dtype=float),
    )


def enumerate_vertex_optimum(model, tol=1e-7):
    """Brute-force optimum of a bounded LP by enumerating candidate vertices.

    Returns None when no feasible vertex exists.  Only valid for models
    whose feasible region is a (possibly empty) polytope, e.g. when all
    variables carry finite bounds.
    """
    n = model.n_vars
    cands = [(model.row_coeffs[r], model.row_rhs[r]) for r in range(model.n_rows)]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(model.lower[j]):
            cands.append((e, model.lower[j]))
        if np.isfinite(model.upper[j]):
            cands.append((e, model.upper[j]))

    def feasible(x):
        lhs = model.row_coeffs @ x
        for r, sense in enumerate(model.row_senses):
            err = lhs[r] - model.row_rhs[r]
            if sense == "<=" and err > tol:
                return False
            if sense == ">=" and err < -tol:
                return False
            if sense == "==" and abs(err) > tol:
                return False
        return bool(
            np.all(x >= model.lower - tol) and np.all(x <= model.upper + tol)
        )

    best = None
    for combo in itertools.combinations(range(len(cands)), n):
        A = np.array([cands[i][0] for i in combo])
        b = np.array([cands[i][1] for i in combo])
        if abs(np.linalg.det(A)) < 1e-9:
            continue
        x = np.linalg.solve(A, b)
        if feasible(x):
            val = float(model.objective @ x)
            if best is None or val > best:
                best = val
    return best


def test_two_variable_corner():
    # max x + 2y, x + y <= 4, y <= 3, box [0, 10]^2 -> (1, 3), objective 7
    m = make_model(
        [1, 2], [[1, 1], [0, 1]], ["<=", "<="], [4, 3], [0, 0], [10, 10]
    )
    sol = solve_lp(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(7.0, abs=1e-9)
    assert sol.x == pytest.approx([1.0, 3.0], abs=1e-9)


def test_equality_row():
    m = make_model([1, 1], [[1, 1]], ["=="], [2], [0, 0], [5, 5])
    sol = solve_lp(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(2.0, abs=1e-9)


def test_free_variable_settles_at_optimum():
    # max -|t| style: max -t with t >= 1 forces t = 1 despite being free.
    m = make_model(
        [-1.0, 0.0],
        [[1, 0], [0, 1]],
        [">=", "<="],
        [1, 4],
        [-np.inf, 0],
        [np.inf, 10],
    )
    sol = solve_lp(m)
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(1.0, abs=1e-9)


def test_upper_bound_only_variable():
    # Variable with only an upper bound: max x subject to x <= 3 box.
    m = make_model([1.0], [[1.0]], ["<="], [5.0], [-np.inf], [3.0])
    sol = solve_lp(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(3.0, abs=1e-9)


def test_infeasible_box_vs_row():
    m = make_model([1, 0], [[1, 0]], [">="], [7], [0, 0], [5, 5])
    sol = solve_lp(m)
    assert sol.status == "infeasible"


def test_unbounded_detected():
    m = make_model([1.0], [[-1.0]], ["<="], [0.0], [0.0], [np.inf])
    sol = solve_lp(m)
    assert sol.status == "unbounded"


def test_degenerate_instance_terminates():
    # Multiple constraints meet at the optimum; classic stalling setup.
    m = make_model(
        [1, 1, 0],
        [[1, 0, 1], [1, 0, 0], [0, 1, 0], [1, 1, 0]],
        ["<=", "<=", "<=", "<="],
        [1, 1, 1, 2],
        [0, 0, 0],
        [10, 10, 10],
    )
    sol = solve_lp(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(2.0, abs=1e-9)


def test_negative_rhs_rows():
    # Rows with negative right-hand sides exercise the sign normalization.
    m = make_model(
        [1, 1], [[-1, -1], [1, -1]], ["<=", "<="], [-1, 0], [0, 0], [4, 4]
    )
    sol = solve_lp(m)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(8.0, abs=1e-9)


def test_random_models_match_vertex_enumeration():
    rng = np.random.default_rng(20240817)
    senses = np.array(["<=", ">=", "=="])
    agree = 0
    for _ in range(120):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 5))
        c = rng.integers(-3, 4, size=n).astype(float)
        A = rng.integers(-3, 4, size=(m, n)).astype(float)
        rhs = rng.integers(-4, 8, size=m).astype(float)
        sense = list(rng.choice(senses, size=m, p=[0.5, 0.35, 0.15]))
        upper = rng.integers(1, 6, size=n).astype(float)
        model = make_model(c, A, sense, rhs, np.zeros(n), upper)
        expected = enumerate_vertex_optimum(model)
        sol = solve_lp(model)
        if expected is None:
            assert sol.status == "infeasible", format_model(model)
        else:
            assert sol.status == "optimal", format_model(model)
            assert sol.objective == pytest.approx(expected, abs=1e-6), (
                format_model(model)
            )
            agree += 1
    # The generator must produce a healthy share of feasible instances.
    assert agree > 40


def test_optimal_point_satisfies_all_rows():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 6))
        model = make_model(
            rng.normal(size=n),
            rng.normal(size=(m, n)),
            ["<="] * m,
            rng.uniform(0.5, 3.0, size=m),
            np.zeros(n),
            np.full(n, 5.0),
        )
        sol = solve_lp(model)
        assert sol.status == "optimal"
        lhs = model.row_coeffs @ sol.x
        assert np.all(lhs <= model.row_rhs + 1e-7)
        assert float(model.objective @ sol.x) == pytest.approx(
            sol.objective, abs=1e-7
        )


def test_malformed_models_rejected():
    with pytest.raises(LpModelError):
        solve_lp(
            make_model([1, 2], [[1, 1]], ["<="], [1], [0], [1])
        )  # bound length mismatch
    with pytest.raises(LpModelError):
        solve_lp(make_model([np.nan], [[1.0]], ["<="], [1], [0], [1]))
    with pytest.raises(LpModelError):
        solve_lp(make_model([1.0], [[1.0]], ["<"], [1], [0], [1]))
    with pytest.raises(LpModelError):
        solve_lp(make_model([1.0], [[1.0]], ["<="], [1], [2], [1]))


def test_format_model_mentions_rows_and_bounds():
    m = make_model([1, 0], [[1, 1]], ["<="], [2], [0, 0], [3, 3])
    m.names = ["bid", "slack"]
    text = format_model(m)
    assert "maximize" in text
    assert "bid" in text
    assert "<= 2" in text
    assert "bounds" in text
