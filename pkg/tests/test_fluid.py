import numpy as np
import pytest

from orthantlab.fluid import (
    AffinePath,
    attraction_verdict,
    integrate,
    verify_affine_path,
)
from orthantlab.lcp import solve_all


def divergent_branch():
    u = np.zeros(6)
    u[0] = 1.0
    v = np.zeros(6)
    v[5] = 0.05
    return u, v


class TestVerifyAffinePath:
    def test_divergent_branch_from_origin(self, example):
        u, v = divergent_branch()
        ok, violations = verify_affine_path(
            AffinePath(z0=np.zeros(6), u=u, v=v), example.theta, example.r_matrix
        )
        assert ok, violations

    def test_divergent_branch_from_spread_start(self, example):
        u, v = divergent_branch()
        z0 = np.zeros(6)
        z0[1:5] = 1.0
        ok, violations = verify_affine_path(
            AffinePath(z0=z0, u=u, v=v), example.theta, example.r_matrix
        )
        assert ok, violations

    def test_rate_identity_violation_detected(self):
        u = np.zeros(6)
        u[0] = 1.0
        v = np.zeros(6)
        v[5] = 1.0
        ok, violations = verify_affine_path(
            AffinePath(z0=np.zeros(6), u=u, v=v), -np.ones(6), np.eye(6)
        )
        assert not ok
        assert any("rate identity" in s for s in violations)

    def test_complementarity_violation_detected(self, example):
        u, v = divergent_branch()
        z0 = np.zeros(6)
        z0[0] = 1.0  # u_1 > 0 requires z_1 identically zero
        ok, violations = verify_affine_path(
            AffinePath(z0=z0, u=u, v=v), example.theta, example.r_matrix
        )
        assert not ok

    def test_agrees_with_solve_all_membership_from_origin(self, example):
        solutions, _ = solve_all(example.theta, example.r_matrix)
        for sol in solutions:
            ok, violations = verify_affine_path(
                AffinePath(z0=np.zeros(6), u=sol.u, v=sol.v),
                example.theta,
                example.r_matrix,
            )
            assert ok, (sol.support_u, violations)

    def test_non_solution_rejected_from_origin(self, example):
        # a valid affine path from 0 must be a complementarity solution
        u = np.zeros(6)
        u[1] = 1.0
        v = example.theta + example.r_matrix @ u
        ok, _ = verify_affine_path(
            AffinePath(z0=np.zeros(6), u=u, v=v), example.theta, example.r_matrix
        )
        solutions, _ = solve_all(example.theta, example.r_matrix)
        member = any(
            np.abs(u - s.u).max() <= 1e-8 and np.abs(v - s.v).max() <= 1e-8
            for s in solutions
        )
        assert ok == member


class TestIntegrate:
    def test_one_dimensional_ramp(self):
        grid = integrate(np.array([2.0]), np.array([-1.0]), np.eye(1), 0.01, 4.0)
        expected_z = np.maximum(2.0 - grid.times, 0.0)
        expected_y = np.maximum(grid.times - 2.0, 0.0)
        np.testing.assert_allclose(grid.z_path[:, 0], expected_z, atol=1e-9)
        np.testing.assert_allclose(grid.y_path[:, 0], expected_y, atol=1e-9)

    def test_interior_drift_never_reflects(self):
        theta = np.array([0.5, 0.25])
        grid = integrate(np.array([1.0, 2.0]), theta, np.eye(2), 0.01, 3.0)
        np.testing.assert_array_equal(grid.y_path, 0.0)
        np.testing.assert_allclose(
            grid.z_path, np.array([1.0, 2.0]) + np.outer(grid.times, theta), atol=1e-9
        )

    def test_example_from_origin_realizes_divergent_branch(self, example):
        grid = integrate(np.zeros(6), example.theta, example.r_matrix, 0.01, 50.0)
        assert grid.z_path[-1, 5] / 50.0 == pytest.approx(0.05, rel=1e-6)
        assert np.abs(grid.z_path[-1, :5]).max() <= 1e-9

    def test_grid_invariants_hold(self, example):
        grid = integrate(np.zeros(6), example.theta, example.r_matrix, 0.01, 10.0)
        assert grid.check_invariants(example.theta, example.r_matrix) == []

    def test_per_coordinate_complementarity(self, example):
        grid = integrate(np.zeros(6), example.theta, example.r_matrix, 0.01, 10.0)
        dy = np.diff(grid.y_path, axis=0)
        per_coord = np.abs((dy * grid.z_path[1:]).sum(axis=0))
        assert per_coord.max() <= 1e-9

    def test_h_refinement_linear_error(self, example):
        z0 = np.full(6, 0.5)
        coarse = integrate(z0, example.theta, example.r_matrix, 0.02, 10.0)
        fine = integrate(z0, example.theta, example.r_matrix, 0.01, 10.0)
        gap = np.abs(coarse.z_path[-1] - fine.z_path[-1]).sum()
        assert gap <= 10.0 * 0.02


class TestAttractionVerdict:
    def test_one_dimensional_attracted(self):
        grid = integrate(np.array([2.0]), np.array([-1.0]), np.eye(1), 0.01, 4.0)
        assert attraction_verdict(grid).verdict == "attracted"

    def test_example_divergent(self, example):
        grid = integrate(np.zeros(6), example.theta, example.r_matrix, 0.01, 50.0)
        assert attraction_verdict(grid).verdict == "divergent"

    def test_constant_path_inconclusive(self):
        grid = integrate(np.array([1.0]), np.array([0.0]), np.eye(1), 0.01, 4.0)
        assert attraction_verdict(grid).verdict == "inconclusive"
