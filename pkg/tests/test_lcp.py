import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from orthantlab.lcp import (
    LcpInfeasible,
    classify,
    skorokhod_step,
    solve_all,
    support_masks,
)


def check_solution(sol, theta, r, d):
    assert np.abs(sol.v - (theta + r @ sol.u)).max() <= 1e-9
    assert sol.u.min(initial=0.0) >= 0.0
    assert sol.v.min(initial=0.0) >= 0.0
    assert abs(sol.u @ sol.v) <= 1e-9


class TestSolveAll:
    def test_identity_has_unique_stable_solution(self):
        solutions, skipped = solve_all(-np.ones(4), np.eye(4))
        assert skipped == []
        assert len(solutions) == 1
        sol = solutions[0]
        np.testing.assert_allclose(sol.u, np.ones(4))
        np.testing.assert_allclose(sol.v, np.zeros(4))
        assert sol.stability == "stable"
        assert sol.degeneracy == "nondegenerate"

    def test_nonnegative_drift_gives_empty_support_solution(self):
        theta = np.array([1.0, 2.0, 0.5])
        rng = np.random.default_rng(0)
        r = rng.normal(size=(3, 3))
        solutions, _ = solve_all(theta, r)
        empty = [s for s in solutions if not s.support_u]
        assert len(empty) == 1
        np.testing.assert_allclose(empty[0].v, theta)

    def test_example_contains_divergent_degenerate_branch(self, example):
        solutions, _ = solve_all(example.theta, example.r_matrix)
        e1 = np.zeros(6)
        e1[0] = 1.0
        target_v = np.zeros(6)
        target_v[5] = 0.05
        hits = [
            s
            for s in solutions
            if np.abs(s.u - e1).max() <= 1e-9 and np.abs(s.v - target_v).max() <= 1e-9
        ]
        assert len(hits) == 1
        assert hits[0].stability == "divergent"
        assert hits[0].degeneracy == "degenerate"

    def test_all_solutions_satisfy_invariants(self, example):
        solutions, _ = solve_all(example.theta, example.r_matrix)
        for sol in solutions:
            check_solution(sol, example.theta, example.r_matrix, 6)

    @settings(max_examples=40, deadline=None)
    @given(arrays(float, (3,), elements=st.floats(-5, 5)),
           arrays(float, (3, 3), elements=st.floats(-3, 3)))
    def test_random_solutions_pass_residual_checker(self, theta, r):
        solutions, _ = solve_all(theta, r)
        for sol in solutions:
            check_solution(sol, theta, r, 3)

    def test_p_matrix_uniqueness_on_random_instances(self):
        from orthantlab.matclass import is_p_matrix

        rng = np.random.default_rng(3)
        trials = 0
        while trials < 500:
            a = rng.normal(size=(3, 3)) + 3.0 * np.eye(3)
            ok, _ = is_p_matrix(a)
            if not ok:
                continue
            trials += 1
            theta = rng.normal(size=3)
            solutions, _ = solve_all(theta, a)
            assert len(solutions) == 1


class TestClassify:
    def test_divergent_degenerate(self):
        u = np.zeros(6)
        u[0] = 1.0
        v = np.zeros(6)
        v[5] = 0.05
        assert classify(u, v, 6) == ("divergent", "degenerate")

    def test_stable_nondegenerate(self):
        assert classify(np.ones(4), np.zeros(4), 4) == ("stable", "nondegenerate")

    def test_divergent_nondegenerate(self):
        theta = np.array([1.0, 2.0, 3.0])
        assert classify(np.zeros(3), theta, 3) == ("divergent", "nondegenerate")


class TestSkorokhodStep:
    @settings(max_examples=50, deadline=None)
    @given(arrays(float, (4,), elements=st.floats(0, 10)),
           arrays(float, (4, 4), elements=st.floats(-2, 2)))
    def test_identity_on_nonnegative_input(self, q, r):
        dy, z = skorokhod_step(q, r)
        np.testing.assert_array_equal(dy, np.zeros(4))
        np.testing.assert_array_equal(z, q)

    def test_one_dimensional_reflection(self):
        dy, z = skorokhod_step(np.array([-0.3]), np.eye(1))
        assert dy[0] == pytest.approx(0.3)
        assert z[0] == 0.0

    def test_example_all_negative_satisfies_postconditions(self, example):
        q = -np.ones(6)
        dy, z = skorokhod_step(q, example.r_matrix)
        assert dy.min() >= 0.0
        assert z.min() >= 0.0
        np.testing.assert_allclose(z, q + example.r_matrix @ dy, atol=1e-9)
        assert abs(dy @ z) <= 1e-9

    @given(st.floats(0.01, 100), st.floats(0.01, 10))
    def test_one_dimensional_positive_homogeneity(self, q_mag, lam):
        dy1, z1 = skorokhod_step(np.array([-q_mag]), np.eye(1))
        dy2, z2 = skorokhod_step(np.array([-lam * q_mag]), np.eye(1))
        assert dy2[0] == pytest.approx(lam * dy1[0], rel=1e-12)
        assert z2[0] == z1[0] == 0.0

    def test_infeasible_raises_with_offending_input(self):
        with pytest.raises(LcpInfeasible) as exc:
            skorokhod_step(np.array([-1.0]), np.array([[-1.0]]))
        np.testing.assert_array_equal(exc.value.q, [-1.0])


class TestSupportMasks:
    def test_order_and_count(self):
        masks = support_masks(3)
        assert list(masks) == [0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111]

    def test_matches_python_tie_break(self, example):
        # the kernels and skorokhod_step must share one support order; spot
        # check that the first feasible mask equals the support chosen here
        q = np.array([-1.0, 0.5, 0.5, 0.5, 0.5, -2.0])
        dy, _ = skorokhod_step(q, example.r_matrix)
        chosen = 0
        for k in np.flatnonzero(dy > 0):
            chosen |= 1 << int(k)
        masks = list(support_masks(6))
        assert chosen in masks
