import json

import numpy as np
import pytest

from bellbound import SdpProblem, dual_certificate_check, gram_problem, solve
from bellbound.sdp import MAX_ITERATIONS, OPTIMAL


def engineered_problem(rng: np.random.Generator):
    """Random SDP with a known optimum, built from a strictly complementary
    primal-dual pair (X*, y*, S*) with X* S* = 0.  A trace constraint keeps
    the feasible set compact so the optimal face is bounded."""
    n = int(rng.integers(2, 9))
    m = int(rng.integers(2, max(3, n)))
    rank = int(rng.integers(1, n))
    basis, _ = np.linalg.qr(rng.normal(size=(n, n)))
    x_eigs = np.concatenate([rng.uniform(0.5, 2.0, rank), np.zeros(n - rank)])
    s_eigs = np.concatenate([np.zeros(rank), rng.uniform(0.5, 2.0, n - rank)])
    x_star = basis @ np.diag(x_eigs) @ basis.T
    s_star = basis @ np.diag(s_eigs) @ basis.T
    y_star = rng.normal(size=m + 1)
    mats = [np.eye(n)]
    for _ in range(m):
        a = rng.normal(size=(n, n))
        mats.append((a + a.T) / 2)
    c = sum(y * a for y, a in zip(y_star, mats)) + s_star
    constraints = [(a, float(np.sum(a * x_star))) for a in mats]
    problem = SdpProblem(n=n, c=c, constraints=constraints, sense="min")
    return problem, float(np.sum(c * x_star))


class TestValidation:
    def test_rejects_asymmetric_objective(self):
        c = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            SdpProblem(n=2, c=c, constraints=[(np.eye(2), 1.0)])

    def test_rejects_asymmetric_constraint(self):
        a = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            SdpProblem(n=2, c=np.eye(2), constraints=[(a, 1.0)])

    def test_rejects_too_many_constraints(self):
        cons = [(np.eye(2), 1.0)] * 4
        with pytest.raises(ValueError):
            SdpProblem(n=2, c=np.eye(2), constraints=cons)

    def test_rejects_bad_sense(self):
        with pytest.raises(ValueError):
            SdpProblem(n=1, c=np.eye(1), constraints=[(np.eye(1), 1.0)], sense="up")


class TestBasicSolves:
    def test_scalar_equality(self):
        prob = SdpProblem(
            n=1, c=np.array([[1.0]]), constraints=[(np.array([[1.0]]), 3.0)]
        )
        sol = solve(prob)
        assert sol.status == OPTIMAL
        assert abs(sol.primal_obj - 3.0) < 1e-7

    def test_largest_eigenvalue_form(self):
        prob = SdpProblem(
            n=2, c=np.eye(2), constraints=[(np.eye(2), 1.0)], sense="max"
        )
        sol = solve(prob)
        assert sol.status == OPTIMAL
        assert abs(sol.primal_obj - 1.0) < 1e-7

    def test_engineered_optima(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            problem, optimum = engineered_problem(rng)
            sol = solve(problem)
            assert sol.status == OPTIMAL
            assert abs(sol.gap) <= 1e-7 * (1 + abs(sol.primal_obj))
            assert abs(sol.primal_obj - optimum) <= 1e-6


class TestGramProblem:
    def test_primal_and_dual_value(self):
        sol = solve(gram_problem())
        assert sol.status == OPTIMAL
        assert abs(sol.primal_obj + 2.0) <= 1e-6
        assert abs(sol.dual_obj + 2.0) <= 1e-6

    def test_dual_vector(self):
        sol = solve(gram_problem())
        assert np.max(np.abs(sol.y + 0.5)) <= 1e-6

    def test_primal_matrix_shape(self):
        sol = solve(gram_problem())
        diag = np.diag(sol.x)
        assert np.max(np.abs(diag - 1.0)) <= 1e-7
        off_row_sums = sol.x.sum(axis=1) - diag
        assert np.max(np.abs(off_row_sums + 1.0)) <= 1e-5

    def test_certificate(self):
        sol = solve(gram_problem())
        min_eig, feasible = dual_certificate_check(sol.y)
        assert feasible and min_eig >= -1e-9

    def test_certificate_examples(self):
        min_eig, feasible = dual_certificate_check(-0.5 * np.ones(4))
        assert feasible and abs(min_eig) < 1e-12
        min_eig, feasible = dual_certificate_check(np.zeros(4))
        assert not feasible and abs(min_eig + 0.5) < 1e-12
        min_eig, feasible = dual_certificate_check(-np.ones(4))
        assert feasible and abs(min_eig - 0.5) < 1e-12


class TestSolverInvariants:
    def test_weak_duality_on_feasible_iterates(self):
        # Weak duality is a statement about feasible pairs; with an
        # infeasible start it is asserted once both residuals are small.
        rng = np.random.default_rng(55)
        problems = [gram_problem()] + [engineered_problem(rng)[0] for _ in range(20)]
        checked = 0
        for problem in problems:
            sol = solve(problem)
            for entry in sol.history:
                if max(entry["primal_residual"], entry["dual_residual"]) <= 1e-8:
                    assert entry["dual_obj"] <= entry["primal_obj"] + 1e-9 * (
                        1 + abs(entry["primal_obj"])
                    )
                    checked += 1
        assert checked > 0

    def test_mu_decreases_overall(self):
        sol = solve(gram_problem())
        mus = [entry["mu"] for entry in sol.history]
        assert mus[-1] < 1e-7 * mus[0]

    def test_optimal_status_invariants(self):
        rng = np.random.default_rng(66)
        for _ in range(10):
            problem, _ = engineered_problem(rng)
            sol = solve(problem)
            assert sol.status == OPTIMAL
            assert np.linalg.eigvalsh(sol.x)[0] >= -1e-8
            assert np.linalg.eigvalsh(sol.s)[0] >= -1e-8
            assert abs(sol.gap) <= 1e-7 * (1 + abs(sol.primal_obj))
            assert sol.primal_residual <= 1e-8
            assert sol.dual_residual <= 1e-8

    def test_statuses_are_reported(self):
        sol = solve(gram_problem())
        assert sol.status in (OPTIMAL, MAX_ITERATIONS)
        assert sol.iterations < 200


class TestSerialization:
    def test_json_round_trip(self):
        problem = gram_problem()
        again = SdpProblem.from_json(problem.to_json())
        assert again.n == 4 and again.sense == "min"
        sol = solve(again)
        assert abs(sol.primal_obj + 2.0) <= 1e-6

    def test_json_fields(self):
        payload = json.loads(gram_problem().to_json())
        assert set(payload) == {"n", "C", "constraints", "sense"}
        assert len(payload["constraints"]) == 4
        assert payload["constraints"][0]["b"] == 1.0
