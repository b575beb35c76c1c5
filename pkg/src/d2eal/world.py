"""3-DOF unicycle kinematics and the pursuit / collision-avoidance / heading control laws."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .geometry import Vec2

# Direction below this norm is treated as degenerate (flagged, zero command).
EPS_DIR = 1e-9
# Robots closer than this get a capped repulsion instead of a 1/d blow-up.
EPS_COLL = 1e-6

FLAG_DEGENERATE_DIRECTION = "DegenerateDirection"
FLAG_COINCIDENT_ROBOTS = "CoincidentRobots"


class Pose(NamedTuple):
    position: Vec2
    heading: float  # radians, wrapped to (-pi, pi]


class ControlInput(NamedTuple):
    body_velocity: Vec2  # m/s, body frame
    yaw_rate: float  # rad/s


@dataclass(frozen=True)
class ControlParams:
    k1: float = 1.0
    k2: float = 2.0
    k3: float = 2.0
    d_s: float = 5.0  # standoff distance from the target, m
    v_max: float = 20.0  # per-component body velocity bound, m/s
    w_max: float = 2.0  # yaw rate bound, rad/s

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "d_s", "v_max", "w_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"control parameter {name} must be positive")


def wrap_angle(h: float) -> float:
    """Wrap to (-pi, pi]."""
    r = math.fmod(h + math.pi, 2.0 * math.pi)
    if r <= 0.0:
        r += 2.0 * math.pi
    return r - math.pi


def step_kinematics(pose: Pose, u: ControlInput, dt: float) -> Pose:
    """Advance one step: position += dt * R(heading) * v_body, heading += dt * yaw_rate."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    c = math.cos(pose.heading)
    s = math.sin(pose.heading)
    vx, vy = u.body_velocity
    px = pose.position[0] + dt * (c * vx - s * vy)
    py = pose.position[1] + dt * (s * vx + c * vy)
    return Pose(Vec2(px, py), wrap_angle(pose.heading + dt * u.yaw_rate))


def chase_command(
    robot: Pose,
    target_pos_now: Vec2,
    predicted_target: Vec2,
    params: ControlParams,
) -> tuple[Vec2, Optional[str]]:
    """Body-frame reference velocity chasing the predicted target position.

    Direction comes from the look-ahead prediction, magnitude from the
    current range error against the standoff distance d_s.
    """
    dxh_x = predicted_target[0] - robot.position[0]
    dxh_y = predicted_target[1] - robot.position[1]
    n = math.hypot(dxh_x, dxh_y)
    if n < EPS_DIR:
        return Vec2(0.0, 0.0), FLAG_DEGENERATE_DIRECTION
    dist_now = math.hypot(target_pos_now[0] - robot.position[0],
                          target_pos_now[1] - robot.position[1])
    mag = params.k1 * (dist_now - params.d_s) / n
    c = math.cos(robot.heading)
    s = math.sin(robot.heading)
    # R(heading)^T rotates the world-frame direction into the body frame.
    return Vec2(mag * (c * dxh_x + s * dxh_y), mag * (-s * dxh_x + c * dxh_y)), None


def collision_avoidance(
    robot_index: int,
    all_positions: Sequence[Vec2],
    heading: float,
    params: ControlParams,
) -> tuple[Vec2, Optional[str]]:
    """Repulsion from the nearest other robot, magnitude k2 / distance (capped)."""
    if len(all_positions) < 2:
        raise ValueError("collision avoidance needs at least two robots")
    xi = all_positions[robot_index]
    best_d = math.inf
    best_j = -1
    for j, xj in enumerate(all_positions):
        if j == robot_index:
            continue
        d = math.hypot(xj[0] - xi[0], xj[1] - xi[1])
        if d < best_d:  # ties keep the lowest index
            best_d = d
            best_j = j
    xp = all_positions[best_j]
    ex = xp[0] - xi[0]
    ey = xp[1] - xi[1]
    flag = None
    if best_d < EPS_COLL:
        if best_d == 0.0:
            return Vec2(0.0, 0.0), FLAG_COINCIDENT_ROBOTS
        # cap |command| at k2 / EPS_COLL, keep the true direction
        k = -params.k2 / (EPS_COLL * best_d)
        flag = FLAG_COINCIDENT_ROBOTS
    else:
        k = -params.k2 / (best_d * best_d)
    c = math.cos(heading)
    s = math.sin(heading)
    return Vec2(k * (c * ex + s * ey), k * (-s * ex + c * ey)), flag


def heading_command(
    robot: Pose, predicted_target: Vec2, params: ControlParams
) -> tuple[float, Optional[str]]:
    """Yaw rate turning the heading toward the predicted target, clamped to w_max."""
    dxh_x = predicted_target[0] - robot.position[0]
    dxh_y = predicted_target[1] - robot.position[1]
    if math.hypot(dxh_x, dxh_y) < EPS_DIR:
        return 0.0, FLAG_DEGENERATE_DIRECTION
    hx = math.cos(robot.heading)
    hy = math.sin(robot.heading)
    err = math.atan2(hx * dxh_y - hy * dxh_x, hx * dxh_x + hy * dxh_y)
    w = params.k3 * err
    if w > params.w_max:
        w = params.w_max
    elif w < -params.w_max:
        w = -params.w_max
    return w, None


def clamp_control(v: Vec2, yaw_rate: float, params: ControlParams) -> ControlInput:
    """Clamp the summed translational command per component and the yaw rate."""
    vx = min(max(v[0], -params.v_max), params.v_max)
    vy = min(max(v[1], -params.v_max), params.v_max)
    w = min(max(yaw_rate, -params.w_max), params.w_max)
    return ControlInput(Vec2(vx, vy), w)


@dataclass(frozen=True)
class TargetInputSchedule:
    """Open-loop (body velocity, yaw rate) schedule for the target.

    kinds:
      constant  -- fixed speed, zero yaw
      circle    -- fixed speed, fixed yaw rate
      sinusoid  -- fixed speed, yaw rate amp * sin(2*pi*t*dt / period)
      waypoints -- proportional heading toward each waypoint in turn
    """

    kind: str = "sinusoid"
    speed: float = 5.0
    yaw_rate: float = 0.0
    yaw_amplitude: float = 0.3
    yaw_period: float = 40.0  # seconds
    waypoints: tuple[tuple[float, float], ...] = ()
    waypoint_radius: float = 2.0
    turn_gain: float = 1.0

    def inputs(self, t: int, dt: float, pose: Pose, wp_idx: int = 0) -> tuple[ControlInput, int]:
        """Control inputs at step t; returns (inputs, next waypoint index)."""
        if self.kind == "constant":
            return ControlInput(Vec2(self.speed, 0.0), 0.0), wp_idx
        if self.kind == "circle":
            return ControlInput(Vec2(self.speed, 0.0), self.yaw_rate), wp_idx
        if self.kind == "sinusoid":
            w = self.yaw_amplitude * math.sin(2.0 * math.pi * t * dt / self.yaw_period)
            return ControlInput(Vec2(self.speed, 0.0), w), wp_idx
        if self.kind == "waypoints":
            if not self.waypoints:
                return ControlInput(Vec2(0.0, 0.0), 0.0), wp_idx
            px, py = pose.position
            idx = min(wp_idx, len(self.waypoints) - 1)
            wx, wy = self.waypoints[idx]
            if math.hypot(wx - px, wy - py) < self.waypoint_radius and idx + 1 < len(self.waypoints):
                idx += 1
                wx, wy = self.waypoints[idx]
            err = wrap_angle(math.atan2(wy - py, wx - px) - pose.heading)
            return ControlInput(Vec2(self.speed, 0.0), self.turn_gain * err), idx
        raise ValueError(f"unknown target schedule kind: {self.kind}")


def step_target(
    target: Pose, t: int, schedule: TargetInputSchedule, dt: float, wp_idx: int = 0
) -> tuple[Pose, int]:
    """Advance the target one step under its input schedule."""
    u, idx = schedule.inputs(t, dt, target, wp_idx)
    return step_kinematics(target, u, dt), idx


def target_trajectory(start: Pose, schedule: TargetInputSchedule, steps: int, dt: float) -> list[Pose]:
    """Poses at t = 0..steps inclusive."""
    out = [start]
    pose = start
    wp_idx = 0
    for t in range(steps):
        pose, wp_idx = step_target(pose, t, schedule, dt, wp_idx)
        out.append(pose)
    return out


def initial_robot_poses(n: int, target: Vec2, radius: float = 12.0) -> list[Pose]:
    """Spread n robots on an arc behind the target, headings pointing at it."""
    poses = []
    for i in range(n):
        if n == 1:
            ang = math.pi
        else:
            ang = math.pi + (i / (n - 1) - 0.5) * (2.0 * math.pi / 3.0)
        px = target[0] + radius * math.cos(ang)
        py = target[1] + radius * math.sin(ang)
        heading = wrap_angle(math.atan2(target[1] - py, target[0] - px))
        poses.append(Pose(Vec2(px, py), heading))
    return poses
