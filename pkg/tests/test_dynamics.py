"""Vehicle dynamics: restoring forces, thrust allocation, integration."""

import math

import numpy as np
import pytest

from subsim import quat
from subsim.dynamics import (
    GRAVITY,
    VehicleParams,
    VehicleState,
    Wrench,
    allocate_thrust,
    build_thruster_matrix,
    default_params,
    dynamics_step,
    params_from_dict,
)
from subsim.world import CurrentField

STILL = CurrentField()


def neutral_params(**overrides) -> VehicleParams:
    p = default_params()
    cfg = dict(
        mass=p.mass,
        added_mass=p.added_mass,
        linear_drag=p.linear_drag,
        quadratic_drag=p.quadratic_drag,
        buoyancy_force=p.mass * GRAVITY,
        center_of_buoyancy=p.center_of_buoyancy,
        inertia_diag=p.inertia_diag,
        thruster_matrix=p.thruster_matrix,
        max_thrust=p.max_thrust,
    )
    cfg.update(overrides)
    return VehicleParams(**cfg)


class TestRestoring:
    def test_level_neutral_cob_above_com(self):
        params = neutral_params(center_of_buoyancy=(0, 0, 0.05))
        w = __import__("subsim.dynamics", fromlist=["restoring_wrench"]).restoring_wrench(
            quat.IDENTITY, params
        )
        assert np.allclose(w.torque, 0.0, atol=1e-12)
        assert w.force[2] == pytest.approx(params.buoyancy_force - params.mass * GRAVITY, abs=1e-9)

    def test_roll_90_rights_vehicle(self):
        from subsim.dynamics import restoring_wrench

        params = neutral_params(center_of_buoyancy=(0, 0, 0.05))
        q = quat.from_rotvec((math.pi / 2, 0, 0))  # roll +90 deg
        w = restoring_wrench(q, params)
        # righting torque must oppose the roll (negative about body x)
        assert w.torque[0] < 0
        assert abs(w.torque[1]) < 1e-9 and abs(w.torque[2]) < 1e-9

    def test_arbitrary_quaternion_matches_matrix_eval(self):
        from subsim.dynamics import restoring_wrench

        params = neutral_params(center_of_buoyancy=(0.01, -0.02, 0.04), buoyancy_force=120.0)
        gen = np.random.default_rng(1)
        for _ in range(20):
            q = quat.normalize(gen.normal(size=4))
            w = restoring_wrench(q, params)
            rt = quat.to_matrix(q).T
            fg = rt @ np.array([0, 0, -params.mass * GRAVITY])
            fb = rt @ np.array([0, 0, params.buoyancy_force])
            assert np.allclose(w.force, fg + fb, atol=1e-12)
            assert np.allclose(w.torque, np.cross(params.center_of_buoyancy, fb), atol=1e-12)


class TestAllocation:
    def test_zero_wrench_zero_commands(self):
        alloc = allocate_thrust(Wrench(), default_params())
        assert np.allclose(alloc.forces, 0.0)
        assert not alloc.saturated

    def test_pure_heave_symmetry(self):
        params = default_params()
        alloc = allocate_thrust(Wrench(force=(0, 0, 20.0)), params)
        vertical = alloc.forces[4:]
        horizontal = alloc.forces[:4]
        assert np.allclose(horizontal, 0.0, atol=1e-9)
        assert np.allclose(vertical, vertical[0])
        assert vertical[0] == pytest.approx(5.0, abs=1e-9)

    def test_reconstruction(self):
        params = default_params()
        gen = np.random.default_rng(2)
        for _ in range(50):
            wrench = Wrench(force=gen.uniform(-20, 20, 3), torque=gen.uniform(-2, 2, 3))
            alloc = allocate_thrust(wrench, params)
            if not alloc.saturated:
                assert np.allclose(params.thruster_matrix @ alloc.forces, wrench.as_vector(), atol=1e-9)

    def test_saturation_flag(self):
        alloc = allocate_thrust(Wrench(force=(0, 0, 1e5)), default_params())
        assert alloc.saturated
        assert np.all(np.abs(alloc.forces) <= default_params().max_thrust + 1e-12)

    def test_underactuated_warns(self):
        with pytest.warns(UserWarning):
            params_from_dict(
                {
                    "mass": 5.0,
                    "thrusters": [{"position": [0, 0, 0], "direction": [1, 0, 0]}],
                }
            )


class TestStep:
    def test_neutral_buoyancy_at_rest_stays(self):
        params = neutral_params(center_of_buoyancy=(0, 0, 0.02))
        state = VehicleState(position=(1.0, 2.0, -5.0))
        zero = np.zeros(params.thruster_count)
        for k in range(500):  # 10 s at dt=0.02
            state = dynamics_step(state, params, zero, STILL, k * 0.02, 0.02)
        assert np.linalg.norm(state.position - np.array([1.0, 2.0, -5.0])) < 1e-9
        assert np.linalg.norm(state.lin_vel) < 1e-12

    def test_terminal_velocity_matches_current(self):
        params = neutral_params()
        state = VehicleState(position=(0, 0, -5.0))
        field = CurrentField(base=(1.0, 0, 0))
        zero = np.zeros(params.thruster_count)
        t = 0.0
        for _ in range(3000):  # 60 s
            state = dynamics_step(state, params, zero, field, t, 0.02)
            t += 0.02
        world_vel = state.world_velocity()
        assert abs(world_vel[0] - 1.0) < 0.01
        assert abs(world_vel[1]) < 0.01 and abs(world_vel[2]) < 0.01

    def test_single_step_matches_scalar_oracle(self):
        """Transcribe the update rule with plain scalars and compare."""
        params = neutral_params(center_of_buoyancy=(0.0, 0.0, 0.03), buoyancy_force=115.0)
        state = VehicleState(
            position=(0.5, -0.25, -2.0),
            orientation=quat.normalize(np.array([0.9, 0.1, -0.05, 0.2])),
            lin_vel=(0.3, -0.1, 0.05),
            ang_vel=(0.02, -0.01, 0.1),
        )
        cmds = np.array([1.0, -2.0, 0.5, 0.25, 3.0, -1.0, 0.75, 2.0])
        field = CurrentField(base=(0.2, -0.1, 0.0), gust_amplitude=(0.1, 0, 0), gust_period=10.0, gust_phase=0.3)
        t, dt = 1.7, 0.02

        nxt = dynamics_step(state, params, cmds, field, t, dt)

        # oracle: same formulas, written out step by step
        R = quat.to_matrix(state.orientation)
        flow = np.array([0.2, -0.1, 0.0]) + np.array([0.1, 0, 0]) * math.sin(2 * math.pi * t / 10.0 + 0.3)
        vr = np.concatenate([state.lin_vel - R.T @ flow, state.ang_vel])
        tau = params.thruster_matrix @ cmds
        tau = tau - params.linear_drag * vr - params.quadratic_drag * np.abs(vr) * vr
        rt = R.T
        fg = rt @ np.array([0, 0, -params.mass * GRAVITY])
        fb = rt @ np.array([0, 0, 115.0])
        tau = tau + np.concatenate([fg + fb, np.cross(np.array([0.0, 0.0, 0.03]), fb)])
        mdiag = np.concatenate([np.full(3, params.mass), params.inertia_diag]) + params.added_mass
        v6 = np.concatenate([state.lin_vel, state.ang_vel]) + dt * (tau / mdiag)
        pos = state.position + dt * (R @ v6[:3])
        q = quat.normalize(quat.multiply(state.orientation, quat.from_rotvec(dt * v6[3:])))

        assert np.allclose(nxt.lin_vel, v6[:3], atol=1e-15)
        assert np.allclose(nxt.ang_vel, v6[3:], atol=1e-15)
        assert np.allclose(nxt.position, pos, atol=1e-15)
        assert np.allclose(nxt.orientation, q, atol=1e-15)

    def test_energy_dissipation_under_pure_drag(self):
        params = neutral_params(center_of_buoyancy=(0, 0, 0.0))
        gen = np.random.default_rng(7)
        zero = np.zeros(params.thruster_count)
        for _ in range(100):
            state = VehicleState(
                position=gen.uniform(-5, 5, 3) * np.array([1, 1, 0]) + (0, 0, -5),
                orientation=quat.normalize(gen.normal(size=4)),
                lin_vel=gen.uniform(-1.5, 1.5, 3),
                ang_vel=gen.uniform(-1.0, 1.0, 3),
            )
            energy = state.kinetic_energy(params)
            for k in range(50):
                state = dynamics_step(state, params, zero, STILL, k * 0.02, 0.02)
                e = state.kinetic_energy(params)
                assert e <= energy + 1e-12
                energy = e

    def test_quaternion_norm_stable_100k_steps(self):
        params = default_params()
        state = VehicleState(position=(0, 0, -5), ang_vel=(0.3, -0.2, 0.5))
        cmds = np.full(params.thruster_count, 2.0)
        t = 0.0
        worst = 0.0
        for _ in range(100_000):
            state = dynamics_step(state, params, cmds, STILL, t, 0.02)
            t += 0.02
            worst = max(worst, abs(np.linalg.norm(state.orientation) - 1.0))
        assert worst < 1e-9

    def test_determinism_bitwise(self):
        params = default_params()
        field = CurrentField(base=(0.1, 0.2, 0.0))
        cmds = np.array([1, 2, 3, 4, 5, 6, 7, 8], dtype=float)

        def run():
            s = VehicleState(position=(0, 0, -3), lin_vel=(0.1, 0, 0))
            for k in range(200):
                s = dynamics_step(s, params, cmds, field, k * 0.02, 0.02)
            return s

        a, b = run(), run()
        assert np.array_equal(a.position, b.position)
        assert np.array_equal(a.orientation, b.orientation)
        assert np.array_equal(a.lin_vel, b.lin_vel)

    def test_dt_validation(self):
        params = default_params()
        with pytest.raises(ValueError):
            dynamics_step(VehicleState(), params, np.zeros(8), STILL, 0.0, 0.2)

    def test_command_clamping(self):
        params = default_params()
        huge = np.full(params.thruster_count, 1e6)
        state = dynamics_step(VehicleState(position=(0, 0, -5)), params, huge, STILL, 0, 0.02)
        capped = dynamics_step(
            VehicleState(position=(0, 0, -5)), params, np.full(params.thruster_count, params.max_thrust), STILL, 0, 0.02
        )
        assert np.allclose(state.lin_vel, capped.lin_vel)


class TestThrusterMatrix:
    def test_column_layout(self):
        m = build_thruster_matrix([{"position": [0, 0.2, 0], "direction": [0, 0, 2.0]}])
        # direction normalized, torque = r x d
        assert np.allclose(m[:, 0], [0, 0, 1, 0.2, 0, 0])
