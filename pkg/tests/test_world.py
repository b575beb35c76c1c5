import math

import numpy as np
import pytest

from d2eal.geometry import Vec2
from d2eal.world import (
    FLAG_COINCIDENT_ROBOTS,
    FLAG_DEGENERATE_DIRECTION,
    ControlInput,
    ControlParams,
    Pose,
    TargetInputSchedule,
    chase_command,
    clamp_control,
    collision_avoidance,
    heading_command,
    initial_robot_poses,
    step_kinematics,
    step_target,
    target_trajectory,
    wrap_angle,
)

P = ControlParams(k1=1.0, k2=1.0, k3=1.0, d_s=5.0, v_max=20.0, w_max=2.0)


class TestKinematics:
    def test_axis_aligned(self):
        p = step_kinematics(Pose(Vec2(0, 0), 0.0), ControlInput(Vec2(1, 0), 0.0), 0.1)
        assert p.position == pytest.approx((0.1, 0.0))
        assert p.heading == 0.0

    def test_rotated_ninety_degrees(self):
        p = step_kinematics(Pose(Vec2(0, 0), math.pi / 2), ControlInput(Vec2(1, 0), 0.0), 0.1)
        assert p.position.x == pytest.approx(0.0, abs=1e-15)
        assert p.position.y == pytest.approx(0.1)

    def test_pure_yaw(self):
        p = step_kinematics(Pose(Vec2(0, 0), 0.0), ControlInput(Vec2(0, 0), 1.0), 0.1)
        assert p.position == (0.0, 0.0)
        assert p.heading == pytest.approx(0.1)

    def test_heading_wraps(self):
        p = step_kinematics(Pose(Vec2(0, 0), 3.1), ControlInput(Vec2(0, 0), 1.0), 0.1)
        assert -math.pi < p.heading <= math.pi

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            step_kinematics(Pose(Vec2(0, 0), 0.0), ControlInput(Vec2(0, 0), 0.0), 0.0)

    def test_displacement_is_isometric(self):
        # rotation preserves the body-velocity norm
        rng = np.random.default_rng(3)
        for _ in range(300):
            h = rng.uniform(-math.pi, math.pi)
            v = Vec2(*rng.normal(size=2, scale=10))
            pose = Pose(Vec2(*rng.normal(size=2, scale=100)), h)
            dt = rng.uniform(0.01, 1.0)
            p = step_kinematics(pose, ControlInput(v, 0.0), dt)
            disp = math.hypot(p.position.x - pose.position.x, p.position.y - pose.position.y)
            assert disp == pytest.approx(dt * v.norm(), rel=1e-12)

    def test_wrap_angle_range(self):
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
        for h in np.linspace(-20, 20, 401):
            w = wrap_angle(h)
            assert -math.pi < w <= math.pi + 1e-15


class TestChaseCommand:
    def test_collinear(self):
        cmd, flag = chase_command(Pose(Vec2(0, 0), 0.0), Vec2(10, 0), Vec2(10, 0), P)
        assert flag is None
        assert cmd == pytest.approx((5.0, 0.0))

    def test_standoff_equilibrium(self):
        cmd, _ = chase_command(Pose(Vec2(0, 0), 0.0), Vec2(5, 0), Vec2(5, 0), P)
        assert cmd == pytest.approx((0.0, 0.0), abs=1e-12)

    def test_rotated_body_frame_matches_matrix_oracle(self):
        # independent check: R(heading)^T applied with numpy
        rng = np.random.default_rng(9)
        for _ in range(100):
            h = rng.uniform(-math.pi, math.pi)
            robot = Pose(Vec2(*rng.normal(size=2, scale=5)), h)
            now = Vec2(*rng.normal(size=2, scale=20))
            pred = Vec2(*rng.normal(size=2, scale=20))
            cmd, flag = chase_command(robot, now, pred, P)
            if flag:
                continue
            r = np.array([[math.cos(h), -math.sin(h)], [math.sin(h), math.cos(h)]])
            d = np.array([pred.x - robot.position.x, pred.y - robot.position.y])
            dn = np.array([now.x - robot.position.x, now.y - robot.position.y])
            expect = P.k1 * (r.T @ (d / np.linalg.norm(d))) * (np.linalg.norm(dn) - P.d_s)
            assert np.allclose(cmd, expect, atol=1e-9)

    def test_rotated_simple_case(self):
        cmd, _ = chase_command(Pose(Vec2(0, 0), math.pi / 2), Vec2(10, 0), Vec2(10, 0), P)
        assert cmd == pytest.approx((0.0, -5.0), abs=1e-12)

    def test_degenerate_direction_flagged(self):
        cmd, flag = chase_command(Pose(Vec2(1, 1), 0.0), Vec2(9, 9), Vec2(1, 1), P)
        assert cmd == (0.0, 0.0)
        assert flag == FLAG_DEGENERATE_DIRECTION


class TestCollisionAvoidance:
    def test_two_robots(self):
        cmd, flag = collision_avoidance(0, [Vec2(0, 0), Vec2(2, 0)], 0.0, P)
        assert flag is None
        assert cmd == pytest.approx((-0.5, 0.0))

    def test_nearest_selection(self):
        positions = [Vec2(0, 0), Vec2(10, 0), Vec2(0, 3)]
        cmd, _ = collision_avoidance(0, positions, 0.0, P)
        # nearest is robot 2 at distance 3, repulsion points along -y
        assert cmd == pytest.approx((0.0, -1.0 / 3.0))

    def test_tie_prefers_lowest_index(self):
        positions = [Vec2(0, 0), Vec2(2, 0), Vec2(-2, 0)]
        cmd, _ = collision_avoidance(0, positions, 0.0, P)
        assert cmd == pytest.approx((-0.5, 0.0))

    def test_inverse_distance_law(self):
        # magnitude halves when distance doubles
        m1, _ = collision_avoidance(0, [Vec2(0, 0), Vec2(1, 0)], 0.0, P)
        m2, _ = collision_avoidance(0, [Vec2(0, 0), Vec2(2, 0)], 0.0, P)
        assert abs(m1.x) == pytest.approx(2 * abs(m2.x))
        for d in (0.5, 1.0, 3.0, 7.0):
            cmd, _ = collision_avoidance(0, [Vec2(0, 0), Vec2(d, 0)], 0.0, P)
            assert Vec2(*cmd).norm() == pytest.approx(P.k2 / d)

    def test_capped_when_coincident(self):
        cmd, flag = collision_avoidance(0, [Vec2(0, 0), Vec2(1e-8, 0)], 0.0, P)
        assert flag == FLAG_COINCIDENT_ROBOTS
        assert Vec2(*cmd).norm() <= P.k2 / 1e-6 + 1e-6

    def test_exactly_coincident_zero(self):
        cmd, flag = collision_avoidance(0, [Vec2(0, 0), Vec2(0, 0)], 0.0, P)
        assert flag == FLAG_COINCIDENT_ROBOTS
        assert cmd == (0.0, 0.0)

    def test_needs_two_robots(self):
        with pytest.raises(ValueError):
            collision_avoidance(0, [Vec2(0, 0)], 0.0, P)


class TestHeadingCommand:
    def test_aligned(self):
        w, flag = heading_command(Pose(Vec2(0, 0), 0.0), Vec2(10, 0), P)
        assert w == 0.0
        assert flag is None

    def test_perpendicular_left(self):
        big = ControlParams(k1=1, k2=1, k3=1, d_s=5, v_max=20, w_max=10)
        w, _ = heading_command(Pose(Vec2(0, 0), 0.0), Vec2(0, 1), big)
        assert w == pytest.approx(math.pi / 2)

    def test_quadrant_sign_from_cross_term(self):
        big = ControlParams(k1=1, k2=1, k3=1, d_s=5, v_max=20, w_max=10)
        w, _ = heading_command(Pose(Vec2(0, 0), 0.0), Vec2(-1, -1e-9), big)
        assert w == pytest.approx(-math.pi, rel=1e-6)
        w2, _ = heading_command(Pose(Vec2(0, 0), 0.0), Vec2(-1, 1e-9), big)
        assert w2 == pytest.approx(math.pi, rel=1e-6)

    def test_clamped_to_w_max(self):
        w, _ = heading_command(Pose(Vec2(0, 0), 0.0), Vec2(-1, 0.1), P)
        assert abs(w) <= P.w_max

    def test_degenerate(self):
        w, flag = heading_command(Pose(Vec2(3, 3), 1.0), Vec2(3, 3), P)
        assert w == 0.0
        assert flag == FLAG_DEGENERATE_DIRECTION


class TestClamp:
    def test_componentwise(self):
        u = clamp_control(Vec2(100, -100), 50.0, P)
        assert u.body_velocity == (20.0, -20.0)
        assert u.yaw_rate == 2.0


class TestTargetSchedules:
    def test_constant_straight_line(self):
        sched = TargetInputSchedule(kind="constant", speed=5.0)
        traj = target_trajectory(Pose(Vec2(0, 0), 0.0), sched, 100, 0.1)
        assert traj[100].position == pytest.approx((50.0, 0.0))
        assert all(p.position.y == 0.0 for p in traj)

    def test_zero_schedule_stationary(self):
        sched = TargetInputSchedule(kind="constant", speed=0.0)
        traj = target_trajectory(Pose(Vec2(3, 4), 1.0), sched, 50, 0.1)
        assert all(p.position == (3.0, 4.0) for p in traj)

    def test_circle_matches_closed_form(self):
        # constant speed v, yaw rate w: circle of radius v / w; check chord lengths
        v, w, dt = 5.0, 0.5, 0.1
        sched = TargetInputSchedule(kind="circle", speed=v, yaw_rate=w)
        steps = 400
        traj = target_trajectory(Pose(Vec2(0, 0), 0.0), sched, steps, dt)
        # discrete-time model: each step moves v*dt along the current heading,
        # heading advances w*dt; chord between poses k apart = 2 R_d sin(k w dt / 2)
        # with R_d = v dt / (2 sin(w dt / 2))
        r_d = v * dt / (2 * math.sin(w * dt / 2))
        for k in (1, 10, 100):
            chord = math.hypot(
                traj[k].position.x - traj[0].position.x,
                traj[k].position.y - traj[0].position.y,
            )
            assert chord == pytest.approx(2 * r_d * abs(math.sin(k * w * dt / 2)), rel=1e-9)

    def test_sinusoid_bounded_yaw(self):
        sched = TargetInputSchedule(kind="sinusoid", speed=5.0, yaw_amplitude=0.3, yaw_period=40.0)
        for t in range(100):
            (u, _) = sched.inputs(t, 0.1, Pose(Vec2(0, 0), 0.0))
            assert abs(u.yaw_rate) <= 0.3

    def test_waypoints_progress(self):
        sched = TargetInputSchedule(
            kind="waypoints", speed=5.0, waypoints=((20.0, 0.0), (20.0, 20.0)), turn_gain=2.0
        )
        traj = target_trajectory(Pose(Vec2(0, 0), 0.0), sched, 200, 0.1)
        end = traj[-1].position
        assert math.hypot(end.x - 20.0, end.y - 20.0) < 5.0

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            step_target(Pose(Vec2(0, 0), 0.0), 0, TargetInputSchedule(kind="bogus"), 0.1)


class TestInitialPlacement:
    def test_behind_target_facing_it(self):
        poses = initial_robot_poses(6, Vec2(0, 0))
        for p in poses:
            assert p.position.norm() == pytest.approx(12.0)
            assert p.position.x < 0  # behind a target heading along +x
            to_target = math.atan2(-p.position.y, -p.position.x)
            assert wrap_angle(p.heading - to_target) == pytest.approx(0.0, abs=1e-12)

    def test_distinct_positions(self):
        poses = initial_robot_poses(4, Vec2(0, 0))
        assert len({(round(p.position.x, 9), round(p.position.y, 9)) for p in poses}) == 4


class TestStandoffRegression:
    def test_single_robot_converges_to_standoff_band(self):
        # perfect prediction, straight-line target: range settles near d_s within 30 s
        params = ControlParams()  # default gains
        dt = 0.1
        sched = TargetInputSchedule(kind="constant", speed=5.0)
        traj = target_trajectory(Pose(Vec2(0, 0), 0.0), sched, 701, dt)
        robot = initial_robot_poses(1, Vec2(0, 0))[0]
        dists = []
        for t in range(700):
            pred = traj[t + 1].position
            now = traj[t].position
            chase, _ = chase_command(robot, now, pred, params)
            yaw, _ = heading_command(robot, pred, params)
            u = clamp_control(chase, yaw, params)
            robot = step_kinematics(robot, u, dt)
            dists.append(
                math.hypot(
                    traj[t + 1].position.x - robot.position.x,
                    traj[t + 1].position.y - robot.position.y,
                )
            )
        # a proportional chase law tracking a constant-velocity target keeps a
        # steady-state offset of speed / k1 past the standoff distance
        settled = dists[300:]
        center = params.d_s + 5.0 / params.k1
        assert all(abs(d - center) < 1.5 for d in settled), (min(settled), max(settled))
        assert max(settled) - min(settled) < 0.5
