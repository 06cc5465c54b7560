import json
import math

import numpy as np
import pytest

import cqlqg


def test_closed_loop_is_physically_realizable():
    problem, pi = cqlqg.random_problem(3)
    loop = cqlqg.closed_loop(problem, pi)
    assert loop["A"].shape == (4, 4)
    assert loop["pr_residual"] <= 1e-9


def test_solve_ale_residual():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((6, 6)) - 4.0 * np.eye(6)
    W = rng.standard_normal((6, 6))
    W = W + W.T
    X = cqlqg.solve_ale(A, W)
    assert np.linalg.norm(A @ X + X @ A.T + W) <= 1e-10 * (1 + np.linalg.norm(W))


def test_gradient_matches_finite_difference():
    problem, pi = cqlqg.random_problem(4)
    loop = cqlqg.closed_loop(problem, pi)
    T = 0.25 * min(cqlqg.max_admissible_T(loop["A"]), 10.0)
    g = cqlqg.grad_discounted(problem, pi, T)
    direction = np.random.default_rng(1).standard_normal(pi.b.shape)
    h = 1e-6
    plus = cqlqg.ControllerTriple(pi.R2, pi.b + h * direction, pi.e)
    minus = cqlqg.ControllerTriple(pi.R2, pi.b - h * direction, pi.e)
    fd = (cqlqg.cost(problem, plus, T) - cqlqg.cost(problem, minus, T)) / (2 * h)
    assert fd == pytest.approx(np.sum(g.b * direction), rel=1e-5, abs=1e-8)


def test_problem_json_round_trip():
    problem, _ = cqlqg.random_problem(2)
    text = problem.to_json()
    assert json.loads(text)["n"] == 2
    back = cqlqg.SynthesisProblem.from_json(text)
    assert np.array_equal(back.Sigma, problem.Sigma)


def test_bad_input_raises():
    with pytest.raises(cqlqg.Error):
        cqlqg.SynthesisProblem.from_json("{}")


def test_synthesis_reaches_strong_minimum():
    problem, _ = cqlqg.random_problem(5)
    nodes, final = cqlqg.synthesize(problem)
    assert len(nodes) > 1
    assert all(node.grad_norm <= 1e-7 for node in nodes)
    assert final.verdict == "stabilizing"
    assert final.abscissa < 0
    report = cqlqg.check_strong_local_min(problem, final.controller)
    assert report.stationary and report.normal_pd and report.kernel_match
    assert math.isfinite(final.V_inf)
