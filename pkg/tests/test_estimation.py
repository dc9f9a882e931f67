"""Kalman translation filter and complementary attitude filter."""

import numpy as np
import pytest

from subsim import quat
from subsim.autopilot import SensorNoiseConfig, SensorReadings, simulate_sensors
from subsim.dynamics import GRAVITY, VehicleState
from subsim.estimation import EstimatorConfig, FilterDivergence, StateEstimator


def fix_only(t, xyz):
    return SensorReadings(t=t, fix=np.asarray(xyz, dtype=float))


class TestKalmanOracle:
    def test_three_step_hand_iteration(self):
        """Single-axis filter vs textbook 2-state Kalman, equal to 1e-12."""
        dt = 0.1
        qp, r = 0.04, 0.25
        cfg = EstimatorConfig(q_process=qp, r_fix=r, initial_pos_var=1.0, initial_vel_var=0.5)
        est = StateEstimator(cfg, position=(0.0, 0.0, 0.0))

        # hand iteration with explicit matrices
        F = np.array([[1.0, dt], [0.0, 1.0]])
        Q = qp * np.array([[0.25 * dt**4, 0.5 * dt**3], [0.5 * dt**3, dt * dt]])
        H = np.array([[1.0, 0.0]])
        x = np.zeros((2, 1))
        P = np.diag([1.0, 0.5])
        zs = [0.7, 1.1, 1.6]
        for k, z in enumerate(zs):
            x = F @ x
            P = F @ P @ F.T + Q
            S = H @ P @ H.T + r
            K = P @ H.T / S
            x = x + K * (z - H @ x)
            P = (np.eye(2) - K @ H) @ P

            est.step(fix_only(k * dt, (z, 0.0, 0.0)), dt)
            assert est.x[0, 0] == pytest.approx(x[0, 0], abs=1e-12)
            assert est.x[0, 1] == pytest.approx(x[1, 0], abs=1e-12)
            assert np.allclose(est.P[0], P, atol=1e-12)

    def test_covariance_grows_without_measurements(self):
        est = StateEstimator(EstimatorConfig(), position=(0, 0, 0))
        prev = np.trace(est.P.sum(axis=0))
        for _ in range(50):
            est.step(None, 0.02)
            trace = np.trace(est.P.sum(axis=0))
            assert trace > prev
            prev = trace

    def test_covariance_stays_symmetric_psd(self):
        est = StateEstimator(EstimatorConfig(r_fix=0.1), position=(0, 0, 0))
        gen = np.random.default_rng(3)
        for k in range(200):
            readings = fix_only(k * 0.02, gen.normal(0, 1, 3)) if k % 7 == 0 else None
            est.step(readings, 0.02)
            for ax in range(3):
                p = est.P[ax]
                assert p[0, 1] == pytest.approx(p[1, 0], abs=1e-9)
                assert np.all(np.linalg.eigvalsh(p) > -1e-12)

    def test_divergence_raises(self):
        est = StateEstimator(EstimatorConfig(q_process=10.0, covariance_ceiling=1.0), position=(0, 0, 0))
        with pytest.raises(FilterDivergence):
            for _ in range(1000):
                est.step(None, 0.02)


class TestConvergence:
    def test_noiseless_convergence_within_two_seconds(self):
        """Offset initial guess, exact measurements: < 1e-3 m position error by 2 s."""
        truth = VehicleState(position=(2.0, -1.0, -4.0))
        noise = SensorNoiseConfig()  # all stds zero
        rng = np.random.default_rng(0)
        cfg = EstimatorConfig(r_fix=1e-12, r_depth=1e-12)
        est = StateEstimator(cfg, position=(1.0, 0.0, -3.0))  # ~1.7 m of initial error
        dt = 0.02
        for tick in range(100):  # 2 s
            readings = simulate_sensors(truth, noise, rng, tick, dt)
            est.step(readings, dt)
        err = np.linalg.norm(est.x[:, 0] - truth.position)
        assert err < 1e-3

    def test_error_non_increasing_after_convergence(self):
        truth = VehicleState(position=(0.5, 0.5, -2.0))
        noise = SensorNoiseConfig()
        rng = np.random.default_rng(0)
        est = StateEstimator(EstimatorConfig(r_fix=1e-12, r_depth=1e-12), position=(0.0, 0.0, -2.0))
        dt = 0.02
        errs = []
        for tick in range(250):
            est.step(simulate_sensors(truth, noise, rng, tick, dt), dt)
            if tick % 10 == 0:  # sample at the fix cadence
                errs.append(float(np.linalg.norm(est.x[:, 0] - truth.position)))
        settled = errs[10:]
        assert all(b <= a + 1e-12 for a, b in zip(settled, settled[1:]))


class TestAttitude:
    def test_gyro_integration_tracks_yaw(self):
        est = StateEstimator(EstimatorConfig(), position=(0, 0, 0))
        rate = 0.5
        for k in range(100):
            est.step(SensorReadings(t=k * 0.02, gyro=np.array([0, 0, rate])), 0.02)
        assert quat.yaw_of(est.q) == pytest.approx(rate * 2.0, abs=1e-6)

    def test_accel_blend_corrects_tilt(self):
        # start with a wrong roll estimate; level accel readings should fix it
        est = StateEstimator(EstimatorConfig(attitude_alpha=0.1), position=(0, 0, 0))
        est.q = quat.from_rotvec((0.3, 0.0, 0.0))
        level_accel = np.array([0.0, 0.0, GRAVITY])
        for k in range(400):
            est.step(SensorReadings(t=k * 0.02, gyro=np.zeros(3), accel=level_accel), 0.02)
        roll, pitch = quat.roll_pitch_of(est.q)
        assert abs(roll) < 1e-3 and abs(pitch) < 1e-3
