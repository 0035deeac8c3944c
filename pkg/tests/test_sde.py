import numpy as np
import pytest

from orthantlab import fluid
from orthantlab.model import PathGrid, SrbmModel, StateVec
from orthantlab.sde import (
    SimConfig,
    hitting_time,
    simulate,
    states_at,
    validate_path,
)
from orthantlab.seeds import make_rng, replica_seed


class TestSimulate:
    def test_zero_noise_reduces_to_fluid_integrator(self, example):
        cfg = SimConfig(h=0.01, T=5.0, seed=9)
        grid = simulate(example, StateVec(np.zeros(6)), cfg, noise_scale=0.0)
        ref = fluid.integrate(np.zeros(6), example.theta, example.r_matrix, 0.01, 5.0)
        np.testing.assert_array_equal(grid.z_path, ref.z_path)
        np.testing.assert_array_equal(grid.y_path, ref.y_path)

    def test_bit_identical_reruns(self, example):
        cfg = SimConfig(h=0.005, T=2.0, seed=42)
        z0 = StateVec(np.full(6, 0.3))
        a = simulate(example, z0, cfg)
        b = simulate(example, z0, cfg)
        assert a.z_path.tobytes() == b.z_path.tobytes()
        assert a.y_path.tobytes() == b.y_path.tobytes()
        assert a.b_path.tobytes() == b.b_path.tobytes()

    def test_seed_changes_path(self, example):
        z0 = StateVec(np.full(6, 0.3))
        a = simulate(example, z0, SimConfig(h=0.005, T=1.0, seed=1))
        b = simulate(example, z0, SimConfig(h=0.005, T=1.0, seed=2))
        assert a.z_path.tobytes() != b.z_path.tobytes()

    def test_grid_invariants(self, example):
        cfg = SimConfig(h=0.001, T=2.0, seed=5)
        grid = simulate(example, StateVec(np.zeros(6)), cfg)
        assert grid.check_invariants(example.theta, example.r_matrix, tol=1e-7) == []

    def test_rejects_non_completely_s(self):
        model = SrbmModel(
            theta=np.array([-1.0]), sigma=np.eye(1), r_matrix=np.array([[-1.0]])
        )
        with pytest.raises(ValueError, match="completely-S"):
            simulate(model, StateVec(np.zeros(1)), SimConfig(h=0.01, T=1.0, seed=0))

    def test_dimension_mismatch(self, example):
        from orthantlab.model import DimensionError

        with pytest.raises(DimensionError):
            simulate(example, StateVec(np.zeros(5)), SimConfig(h=0.01, T=1.0, seed=0))


class TestValidatePath:
    def test_simulated_example_paths_clean(self, example):
        for seed in range(5):
            grid = simulate(
                example, StateVec(np.zeros(6)), SimConfig(h=0.001, T=2.0, seed=seed)
            )
            report = validate_path(grid, example)
            assert report.ok, report.violations
            assert set(report.checks_run) == {
                "reconstruction",
                "y_monotone",
                "z_nonnegative",
                "complementarity",
                "push_mass_lower",
                "push_mass_half",
                "push_upper",
            }

    def test_injected_push_decrement_flagged(self, example):
        grid = simulate(
            example, StateVec(np.zeros(6)), SimConfig(h=0.01, T=1.0, seed=3)
        )
        y_bad = grid.y_path.copy()
        y_bad[60, 2] -= 0.5
        bad = PathGrid(
            h=grid.h,
            times=grid.times,
            z_path=grid.z_path,
            y_path=y_bad,
            b_path=grid.b_path,
        )
        report = validate_path(bad, example)
        flagged = {v[0] for v in report.violations}
        assert "y_monotone" in flagged
        steps = [v[1] for v in report.violations if v[0] == "y_monotone"]
        assert 59 in steps or 60 in steps

    def test_generic_model_skips_example_checks(self, model_1d):
        grid = simulate(model_1d, StateVec(np.array([2.0])), SimConfig(h=0.01, T=1.0, seed=0))
        report = validate_path(grid, model_1d)
        assert report.ok
        assert "push_upper" not in report.checks_run

    def test_fluid_one_dim_pushes_bounded_by_time(self, model_1d):
        # with zero noise, y(t) <= t with equality only after absorption
        grid = fluid.integrate(np.array([2.0]), np.array([-1.0]), np.eye(1), 0.01, 4.0)
        slack = grid.times - grid.y_path[:, 0]
        assert slack.min() >= -1e-12
        absorbed = grid.times >= 2.0 + 1e-9
        np.testing.assert_allclose(slack[absorbed], 2.0, atol=1e-9)
        assert np.all(slack[~absorbed][1:] > 0)  # strict except at t = 0


class TestStatesAt:
    def test_matches_stored_path(self, example):
        cfg = SimConfig(h=0.01, T=2.0, seed=17)
        z0 = StateVec(np.full(6, 0.2))
        grid = simulate(example, z0, cfg)
        states = states_at(example, z0, cfg, [0.5, 1.0, 2.0])
        for t, s in zip([0.5, 1.0, 2.0], states):
            np.testing.assert_array_equal(s.z, grid.z_path[int(round(t / cfg.h))])

    def test_rejects_unordered_times(self, example):
        cfg = SimConfig(h=0.01, T=2.0, seed=0)
        with pytest.raises(ValueError):
            states_at(example, StateVec(np.zeros(6)), cfg, [1.0, 0.5])


class TestHittingTime:
    def test_start_inside_ball_zero_delay(self, example):
        z0 = StateVec(np.zeros(6))
        cfg = SimConfig(h=0.01, T=1.0, seed=0)
        sample = hitting_time(example, z0, kappa=12.0, delta=0.0, cfg=cfg, cap=10.0)
        assert sample.tau == 0.0 and not sample.censored

    def test_delay_enforced(self, model_1d):
        z0 = StateVec(np.array([0.0]))
        cfg = SimConfig(h=0.01, T=1.0, seed=0)
        sample = hitting_time(
            model_1d, z0, kappa=5.0, delta=0.1, cfg=cfg, cap=10.0, norm="l1"
        )
        assert sample.tau >= 0.1
        assert not sample.censored

    def test_censoring_at_cap(self, model_1d):
        z0 = StateVec(np.array([50.0]))
        cfg = SimConfig(h=0.01, T=1.0, seed=0)
        sample = hitting_time(
            model_1d, z0, kappa=0.01, delta=0.0, cfg=cfg, cap=1.0, norm="l1"
        )
        assert sample.censored and sample.tau == pytest.approx(1.0)

    def test_one_dim_mean_matches_drift_oracle(self, model_1d):
        # E[first passage to 0 from z0 with drift -1] = z0
        reps = 300
        taus = []
        for i in range(reps):
            cfg = SimConfig(h=0.002, T=1.0, seed=replica_seed(99, i))
            s = hitting_time(
                model_1d,
                StateVec(np.array([3.0])),
                kappa=0.01,
                delta=0.0,
                cfg=cfg,
                cap=200.0,
                norm="l1",
            )
            assert not s.censored
            taus.append(s.tau)
        taus = np.array(taus)
        se = taus.std(ddof=1) / np.sqrt(reps)
        assert abs(taus.mean() - 3.0) <= 4.0 * se + 0.05

    def test_weak_error_shrinks_with_step_size(self, model_1d):
        # discrete monitoring detects the passage late; the bias is O(sqrt(h))
        # and must shrink when h is quartered
        def mean_tau(h, base_seed, reps=4000):
            taus = np.empty(reps)
            for i in range(reps):
                cfg = SimConfig(h=h, T=1.0, seed=replica_seed(base_seed, i))
                s = hitting_time(
                    model_1d,
                    StateVec(np.array([1.0])),
                    kappa=0.01,
                    delta=0.0,
                    cfg=cfg,
                    cap=100.0,
                    norm="l1",
                )
                taus[i] = s.tau
            return taus.mean()

        err_coarse = abs(mean_tau(0.04, base_seed=555) - 1.0)
        err_fine = abs(mean_tau(0.01, base_seed=556) - 1.0)
        assert err_fine < err_coarse

    def test_foster_norm_requires_dimension_six(self, model_1d):
        from orthantlab.model import DimensionError

        cfg = SimConfig(h=0.01, T=1.0, seed=0)
        with pytest.raises(DimensionError):
            hitting_time(model_1d, StateVec(np.array([5.0])), 1.0, 0.0, cfg, 1.0)


class TestDrivingNoise:
    def test_max_squared_increment_bound(self, model_1d):
        # over [0, t], E[ max_{s <= s'} (B(s') - B(s))^2 ] <= 8 t; the max over
        # ordered pairs of the squared difference is the squared range
        reps, steps, h = 3000, 1000, 0.001
        vals = np.empty(reps)
        for i in range(reps):
            rng = make_rng(replica_seed(123, i))
            b = np.cumsum(np.sqrt(h) * rng.standard_normal(steps))
            b = np.concatenate([[0.0], b])
            vals[i] = (b.max() - b.min()) ** 2
        se = vals.std(ddof=1) / np.sqrt(reps)
        assert vals.mean() <= 8.0 * (1.0 + 3.0 * se)

    def test_simulated_noise_matches_direct_stream(self, model_1d):
        cfg = SimConfig(h=0.01, T=1.0, seed=77)
        grid = simulate(model_1d, StateVec(np.array([5.0])), cfg)
        rng = make_rng(77)
        db = np.sqrt(cfg.h) * rng.standard_normal((cfg.steps, 1))
        np.testing.assert_allclose(grid.b_path[1:], np.cumsum(db, axis=0), atol=1e-12)
