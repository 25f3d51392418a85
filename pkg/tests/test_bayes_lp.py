"""LP assembly, solving, and region extraction for the Bayes-risk test."""

import math

import numpy as np
import pytest

from compnull.bayes_lp import (
    LpSolution,
    _prior_interval_weights,
    assemble_bayes_region,
    build_lp,
    candidate_objective,
    js_restricted_candidate,
    solve_lp,
)
from compnull.regions import analytic_power, analytic_power_batch
from compnull.statmath import std_normal_cdf, std_normal_quantile

# mpmath, 50 digits
B_AT_005 = 3.9199279690801085          # twice the 0.975 quantile
PRIOR_W_HALF_15 = 0.1603641596988097   # band (0.5, 1.5) mixed over sd-2 prior


@pytest.fixture(scope="module")
def solved12():
    problem = build_lp(0.05, 12)
    return problem, solve_lp(problem)


def test_build_validation():
    with pytest.raises(ValueError, match="alpha"):
        build_lp(0.0, 12)
    with pytest.raises(ValueError, match="m must be"):
        build_lp(0.05, 3)
    with pytest.raises(ValueError, match="prior_sd"):
        build_lp(0.05, 12, prior_sd=0.0)
    with pytest.raises(ValueError, match="grid_points"):
        build_lp(0.05, 12, grid_points=1)
    with pytest.raises(ValueError, match="status"):
        LpSolution(np.zeros(1), 0.0, "bogus")


def test_box_half_width():
    problem = build_lp(0.05, 4)
    assert abs(problem.b - B_AT_005) < 1e-14
    assert problem.b == 2.0 * std_normal_quantile(0.975)
    assert problem.prior_sd == 2.0


def test_prior_weights_match_closed_form():
    # the prior mix of a unit-variance coordinate is exactly normal with
    # scale sqrt(1 + sd^2); quadrature must agree band by band
    # wide priors stretch the panel past the unit-width band features, so
    # they need more nodes
    for sd, nodes in ((0.7, 64), (2.0, 64), (3.5, 128)):
        sig = math.sqrt(1.0 + sd * sd)
        edges = np.array([-2.5, -1.0, -0.25, 0.5, 1.5, 4.0])
        got = _prior_interval_weights(edges, sd, nodes)
        want = [std_normal_cdf(hi / sig) - std_normal_cdf(lo / sig)
                for lo, hi in zip(edges[:-1], edges[1:])]
        assert np.max(np.abs(got - want)) < 1e-10
    single = _prior_interval_weights(np.array([0.5, 1.5]), 2.0, 64)
    assert abs(float(single[0]) - PRIOR_W_HALF_15) < 1e-10


def test_build_lp_structure():
    problem = build_lp(0.1, 6)
    assert len(problem.constraints) == 8 * 6 + 1
    assert len(problem.cells) == 4 * 6 * 6
    assert len(problem.null_grid) == 8 * 6 + 1
    assert max(abs(x) for x, _ in problem.null_grid) == pytest.approx(2 * problem.b)

    # exact negation symmetry of the cell edges
    edges = sorted({c.x.lo for c in problem.cells} | {c.x.hi for c in problem.cells})
    assert len(edges) == 13
    for lo, hi in zip(edges, reversed(edges)):
        assert lo == -hi

    n = len(problem.cells)
    for row in problem.constraints:
        assert 0.0 <= row.rhs <= problem.alpha
        assert row.sense == "<="
        assert np.all(row.values > 0.0)
        assert np.all((row.indices >= 0) & (row.indices < n))
        assert len(np.unique(row.indices)) == len(row.indices)

    assert np.array_equal(problem.cell_weights, -problem.objective)
    assert 0.0 < float(problem.cell_weights.sum()) < 1.0


def test_solve_small_problem(solved12):
    problem, sol = solved12
    assert sol.solver_status == "optimal"
    assert sol.m_r.min() >= -1e-9 and sol.m_r.max() <= 1.0 + 1e-9
    worst = max(float(r.values @ sol.m_r[r.indices] - r.rhs)
                for r in problem.constraints)
    assert worst <= 1e-8
    assert sol.objective_value == pytest.approx(
        candidate_objective(problem, sol.m_r), rel=1e-12)


def test_js_candidate_bounds_the_optimum(solved12):
    problem, sol = solved12
    cand = js_restricted_candidate(problem)
    assert set(np.unique(cand)) <= {0.0, 1.0}
    worst = max(float(r.values @ cand[r.indices] - r.rhs)
                for r in problem.constraints)
    assert worst <= 1e-9
    assert sol.objective_value <= candidate_objective(problem, cand) + 1e-9


def test_solver_is_deterministic(solved12):
    problem, sol = solved12
    again = solve_lp(problem)
    assert np.array_equal(again.m_r, sol.m_r)
    assert again.objective_value == sol.objective_value


def test_assembled_region(solved12):
    problem, sol = solved12
    region = assemble_bayes_region(problem, sol)
    assert region.kind == "bayes"
    assert region.alpha == problem.alpha
    assert region.outside_rule is not None
    assert region.outside_rule.threshold == problem.b / 2.0
    assert region.outside_rule.box == (-problem.b, problem.b, -problem.b, problem.b)
    for cell in region.cells:
        assert 0.0 < cell.p <= 1.0
        assert cell.x.lo >= -problem.b and cell.x.hi <= problem.b

    # level condition on every constraint grid point, then on a 10x finer
    # axis grid (discretization leakage stays tiny)
    pw = analytic_power_batch(region, np.array(problem.null_grid))
    assert float(pw.max()) <= problem.alpha + 1e-6
    fine = np.arange(-20 * problem.m, 20 * problem.m + 1) * (problem.b / (10 * problem.m))
    pts = np.concatenate([np.stack([fine, np.zeros_like(fine)], 1),
                          np.stack([np.zeros_like(fine), fine], 1)])
    assert float(analytic_power_batch(region, pts).max()) <= problem.alpha + 2e-3

    assert analytic_power(region, (0.0, 0.0)) >= 0.04


def test_objective_matches_independent_bayes_risk(solved12):
    # closed-form prior-mixed cell masses give the in-box rejection mass;
    # the LP objective is the in-box prior mass minus that
    problem, sol = solved12
    region = assemble_bayes_region(problem, sol)
    sig = math.sqrt(1.0 + problem.prior_sd ** 2)

    def band(lo, hi):
        return std_normal_cdf(hi / sig) - std_normal_cdf(lo / sig)

    reject_in_box = sum(c.p * band(c.x.lo, c.x.hi) * band(c.y.lo, c.y.hi)
                        for c in region.cells)
    p_box = (band(-problem.b, problem.b)) ** 2
    assert abs(sol.objective_value - (p_box - reject_in_box)) < 1e-6


def test_derandomized_region_is_dominated(solved12):
    problem, sol = solved12
    full = assemble_bayes_region(problem, sol)
    lean = assemble_bayes_region(problem, sol, derandomize=True)
    assert all(c.p >= 1.0 - 1e-9 for c in lean.cells)
    assert len(lean.cells) < len(full.cells)
    keys = {(c.x.lo, c.x.hi, c.y.lo, c.y.hi) for c in full.cells}
    assert all((c.x.lo, c.x.hi, c.y.lo, c.y.hi) in keys for c in lean.cells)
    for d in ((0.0, 0.0), (1.0, 1.0), (2.5, 1.5), (4.0, 4.0)):
        assert analytic_power(lean, d) <= analytic_power(full, d) + 1e-15


def test_assemble_rejects_bad_solutions(solved12):
    problem, sol = solved12
    bad = LpSolution(np.zeros(len(problem.cells)), math.nan, "infeasible")
    with pytest.raises(ValueError, match="infeasible"):
        assemble_bayes_region(problem, bad)
    short = LpSolution(sol.m_r[:5], sol.objective_value, "optimal")
    with pytest.raises(ValueError, match="length"):
        assemble_bayes_region(problem, short)
