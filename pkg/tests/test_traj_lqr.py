"""
tests/test_traj_lqr.py
======================
Riccati solver, trajectory-space model and the integral-action servo.
"""

import sys
from pathlib import Path

# Ensure project root is importable
_PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(_PROJECT_ROOT))

import numpy as np
import pytest
import scipy.linalg

from app.config import DARE_TOL
from app.control import (
    ServoController,
    build_traj_model,
    closed_loop_eval,
    design_servo,
    dlqr_gain,
    lqr_experiment,
    riccati_residual,
    solve_dare,
)
from app.control.traj_lqr import augment
from app.core.hankel import build_model
from app.errors import (
    DareDivergenceError,
    DimensionError,
    ExpressivityError,
    ParameterError,
)
from app.plant.lti import (
    NoiseSpec,
    benchmark_plant,
    gaussian_signal,
    second_order_plant,
    simulate,
    spectral_radius,
)

GOLDEN = (1 + np.sqrt(5)) / 2


def _traj_model(plant, L, samples, seed=0):
    u = gaussian_signal(samples, seed)
    y, _ = simulate(plant, u)
    return build_traj_model(build_model(u, y, L), plant.n)


# ---------------------------------------------------------------------------
# Riccati
# ---------------------------------------------------------------------------


class TestSolveDare:
    def test_scalar_golden_ratio(self):
        P = solve_dare(1.0, 1.0, 1.0, 1.0)
        assert P[0, 0] == pytest.approx(GOLDEN, rel=1e-8)
        K, _ = dlqr_gain(1.0, 1.0, 1.0, 1.0)
        assert K[0, 0] == pytest.approx(1 / GOLDEN, rel=1e-8)

    def test_zero_dynamics(self):
        Q = np.diag([2.0, 3.0])
        P = solve_dare(np.zeros((2, 2)), np.eye(2), Q, np.eye(2))
        np.testing.assert_allclose(P, Q)

    def test_matches_scipy(self):
        rng = np.random.default_rng(4)
        A = 0.5 * rng.standard_normal((4, 4))
        B = rng.standard_normal((4, 2))
        Q = np.eye(4)
        R = np.diag([1.0, 2.0])
        P = solve_dare(A, B, Q, R)
        np.testing.assert_allclose(P, scipy.linalg.solve_discrete_are(A, B, Q, R), rtol=1e-7)
        assert riccati_residual(A, B, Q, R, P) < 1e-8

    def test_random_stable_system(self):
        rng = np.random.default_rng(21)
        A = rng.standard_normal((5, 5))
        A *= 0.9 / spectral_radius(A)
        B = rng.standard_normal((5, 1))
        K, P = dlqr_gain(A, B, np.eye(5), 1.0)
        assert spectral_radius(A - B @ K) < 1.0
        np.testing.assert_allclose(P, P.T, atol=1e-10)
        assert np.linalg.eigvalsh(P)[0] >= -1e-10

    def test_stop_rule_is_absolute(self):
        A, B, Q, R = 2.0, 1.0, 10.0, 1.0
        P = solve_dare(A, B, Q, R)
        assert P[0, 0] > 1.0
        assert riccati_residual(A, B, Q, R, P) <= DARE_TOL
        expected = scipy.linalg.solve_discrete_are([[A]], [[B]], [[Q]], [[R]])[0, 0]
        assert P[0, 0] == pytest.approx(expected, abs=1e-8)

    def test_iteration_budget(self):
        A = np.array([[1.2, 1.0], [0.0, 1.1]])
        B = np.array([[0.0], [1.0]])
        with pytest.raises(DareDivergenceError) as err:
            solve_dare(A, B, np.eye(2), 1.0, max_iter=3)
        assert err.value.iterations == 3

    def test_invalid_weights(self):
        with pytest.raises(ParameterError):
            solve_dare(np.eye(2), np.ones((2, 1)), np.diag([1.0, -1.0]), 1.0)
        with pytest.raises(ParameterError):
            solve_dare(np.eye(2), np.ones((2, 1)), np.eye(2), 0.0)
        with pytest.raises(ParameterError):
            solve_dare(np.eye(2), np.ones((2, 1)), np.array([[1.0, 0.5], [0.0, 1.0]]), 1.0)

    def test_shape_checks(self):
        with pytest.raises(DimensionError):
            solve_dare(np.ones((2, 3)), np.ones((2, 1)), np.eye(2), 1.0)
        with pytest.raises(DimensionError):
            solve_dare(np.eye(2), np.ones((2, 1)), np.eye(3), 1.0)


# ---------------------------------------------------------------------------
# Trajectory-space model
# ---------------------------------------------------------------------------


class TestTrajSpaceModel:
    @pytest.fixture(scope="class")
    def plant(self):
        return second_order_plant()

    @pytest.fixture(scope="class")
    def traj(self, plant):
        return _traj_model(plant, 6, 200)

    def test_block_shapes(self, traj):
        W = traj.width
        assert W == 200 - 1 - 6 + 1
        assert traj.M.shape == traj.S.shape == (12, W)
        assert traj.A_alpha.shape == (W, W)
        assert traj.B_alpha.shape == traj.C_alpha.shape == (W,)
        assert traj.e[5] == 1.0 and traj.e.sum() == 1.0
        assert traj.rank == 6 + 2

    def test_reproduces_plant(self, plant, traj):
        u = gaussian_signal(300, seed=99)
        y, _ = simulate(plant, u)
        alpha = np.zeros(traj.width)
        y_hat = np.empty(300)
        for k, u_k in enumerate(u.values):
            alpha = traj.step(alpha, u_k)
            y_hat[k] = traj.output(alpha)
        np.testing.assert_allclose(y_hat, y.values, atol=1e-6)

    def test_zero_input_stays_at_origin(self, traj):
        alpha = np.zeros(traj.width)
        for _ in range(20):
            alpha = traj.step(alpha, 0.0)
        assert traj.output(alpha) == 0.0

    def test_projection_reproduces_window(self, plant, traj):
        u = gaussian_signal(30, seed=5)
        y, _ = simulate(plant, u)
        alpha = traj.project(u.values[-6:], y.values[-6:])
        np.testing.assert_allclose(traj.M @ alpha, np.r_[u.values[-6:], y.values[-6:]], atol=1e-8)

    def test_rank_below_behaviour(self):
        u = gaussian_signal(80, seed=1)
        y = gaussian_signal(80, seed=2)
        with pytest.raises(ExpressivityError):
            build_traj_model(build_model(u, y, 4), n=8)


# ---------------------------------------------------------------------------
# Servo
# ---------------------------------------------------------------------------


class TestAugment:
    def test_blocks(self):
        A = np.array([[0.5, 0.1], [0.0, 0.3]])
        B = np.array([1.0, 2.0])
        C = np.array([1.0, -1.0])
        A_aug, B_aug = augment(A, B, C)
        np.testing.assert_allclose(A_aug[:2, :2], A)
        np.testing.assert_allclose(A_aug[2, :2], -(C @ A))
        assert A_aug[2, 2] == 1.0
        np.testing.assert_allclose(A_aug[:2, 2], 0.0)
        np.testing.assert_allclose(B_aug, [1.0, 2.0, 1.0])


class TestServoDesign:
    @pytest.fixture(scope="class")
    def plant(self):
        return benchmark_plant()

    @pytest.fixture(scope="class")
    def small_traj(self, plant):
        return _traj_model(plant, 5, 60, seed=3)

    def test_gain_invariant_to_weight_scale(self, small_traj):
        a = design_servo(small_traj, R=1.0, q_error=1.0)
        b = design_servo(small_traj, R=10.0, q_error=10.0)
        np.testing.assert_allclose(a.K, b.K, rtol=1e-6, atol=1e-9)

    def test_stabilizing(self, small_traj):
        assert design_servo(small_traj).closed_loop_radius < 1.0

    def test_full_space_design_agrees(self, small_traj):
        projected = design_servo(small_traj, project_rowspace=True)
        full = design_servo(small_traj, project_rowspace=False)
        assert full.basis is None
        np.testing.assert_allclose(projected.K, full.K, rtol=1e-5, atol=1e-7)

    def test_explicit_weight_shape(self, small_traj):
        with pytest.raises(DimensionError):
            design_servo(small_traj, Q=np.eye(3))

    def test_nonpositive_input_weight(self, small_traj):
        with pytest.raises(ParameterError):
            design_servo(small_traj, R=0.0)

    def test_controller_rejects_foreign_gain(self, plant, small_traj):
        other = _traj_model(plant, 5, 80, seed=4)
        with pytest.raises(DimensionError):
            ServoController(other, design_servo(small_traj))


class TestClosedLoop:
    @pytest.fixture(scope="class")
    def plant(self):
        return benchmark_plant()

    @pytest.fixture(scope="class")
    def servo(self, plant):
        traj = _traj_model(plant, 10, 400, seed=0)
        return traj, design_servo(traj)

    def test_zero_reference_stays_at_rest(self, plant, servo):
        traj, design = servo
        result = closed_loop_eval(plant, design, traj, np.zeros(50))
        np.testing.assert_array_equal(result.y, 0.0)
        np.testing.assert_array_equal(result.u, 0.0)
        assert not result.unstable

    def test_noise_free_step_tracking(self, plant, servo):
        traj, design = servo
        result = closed_loop_eval(plant, design, traj, np.ones(400))
        assert not result.unstable
        assert abs(result.tracking_error[-1]) < 1e-3
        np.testing.assert_array_equal(result.deviation, 0.0)
        assert result.deviation_rms == 0.0

    def test_propagated_alpha_matches_reprojection(self, plant, servo):
        traj, design = servo
        reprojected = closed_loop_eval(plant, design, traj, np.ones(200))
        propagated = closed_loop_eval(plant, design, traj, np.ones(200), reproject=False)
        np.testing.assert_allclose(propagated.y, reprojected.y, atol=1e-6)

    def test_divergence_flag(self, plant, servo):
        traj, design = servo
        result = closed_loop_eval(plant, design, traj, np.ones(100), threshold=1e-3)
        assert result.unstable
        k = result.diverged_at
        assert k is not None and 0 < k < 100
        assert np.all(np.isnan(result.y[k:]))
        assert np.all(np.isfinite(result.y[:k]))

    def test_measurement_noise_is_reproducible(self, plant, servo):
        traj, design = servo
        noise = NoiseSpec(0.01, seed=12)
        a = closed_loop_eval(plant, design, traj, np.ones(100), noise)
        b = closed_loop_eval(plant, design, traj, np.ones(100), noise)
        np.testing.assert_array_equal(a.y, b.y)

    def test_instability_flag_monotone_in_noise(self, plant, servo):
        traj, design = servo
        variances = [0.0, 1e-4, 1.0, 1e8]
        flags = np.array(
            [
                [
                    closed_loop_eval(
                        plant, design, traj, np.zeros(100), NoiseSpec(var, seed=s), threshold=5.0
                    ).unstable
                    for s in range(20)
                ]
                for var in variances
            ],
            dtype=float,
        )
        medians = np.median(flags, axis=1)
        assert np.all(np.diff(medians) >= 0.0)
        assert np.all(np.diff(flags.mean(axis=1)) >= 0.0)
        assert medians[0] == 0.0 and medians[-1] == 1.0

    def test_empty_reference(self, plant, servo):
        traj, design = servo
        with pytest.raises(ParameterError):
            closed_loop_eval(plant, design, traj, [])


class TestLqrExperiment:
    def test_noise_free_data_matches_baseline(self):
        exp = lqr_experiment(
            benchmark_plant(), 5, seed=1, samples=120, data_noise_var=0.0, data_input_noise_var=0.0, horizon=80
        )
        assert exp.data_u.size == exp.data_y.size == 120
        assert exp.result.y.size == 80
        np.testing.assert_array_equal(exp.result.deviation, 0.0)

    def test_noisy_data_runs(self):
        exp = lqr_experiment(
            benchmark_plant(), 5, seed=2, samples=120, data_noise_var=0.1, data_input_noise_var=0.1, horizon=60
        )
        assert exp.result.reference.size == 60
        assert np.isfinite(exp.design.closed_loop_radius)

    def test_input_noise_only_touches_recorded_input(self):
        kwargs = dict(samples=120, data_noise_var=0.0, horizon=40)
        clean = lqr_experiment(benchmark_plant(), 5, seed=3, data_input_noise_var=0.0, **kwargs)
        noisy = lqr_experiment(benchmark_plant(), 5, seed=3, data_input_noise_var=0.5, **kwargs)
        np.testing.assert_array_equal(noisy.data_y, clean.data_y)
        assert not np.array_equal(noisy.data_u, clean.data_u)
        np.testing.assert_allclose(np.std(noisy.data_u - clean.data_u), np.sqrt(0.5), rtol=0.3)
        # the clean-data loop does not see the recorded input
        np.testing.assert_array_equal(noisy.result.baseline_y, clean.result.baseline_y)


class TestDepthAndServoDeviation:
    """Unit-variance input and output noise on 400 samples of P(z), L in {5, 10, 20}."""

    DEPTHS = (5, 10, 20)
    SEEDS = range(20)

    @pytest.fixture(scope="class")
    def runs(self):
        plant = benchmark_plant()
        return {
            (L, s): lqr_experiment(plant, L, seed=s, data_noise_var=1.0, data_input_noise_var=1.0)
            for L in self.DEPTHS
            for s in self.SEEDS
        }

    def test_middle_depth_deviates_least_in_most_seeds(self, runs):
        def score(exp):
            return np.inf if exp.result.unstable else exp.result.deviation_rms

        wins = sum(
            min(self.DEPTHS, key=lambda L: score(runs[(L, s)])) == 10 for s in self.SEEDS
        )
        assert wins >= 12

    def test_output_noise_only_loops_are_stable(self):
        plant = benchmark_plant()
        for s in self.SEEDS:
            for L in self.DEPTHS:
                exp = lqr_experiment(plant, L, seed=s, data_noise_var=1.0, data_input_noise_var=0.0)
                assert not exp.result.unstable, (L, s)
