"""Scenario execution: single runs, Monte Carlo campaigns, the scalability sweep,
and the CSV/JSON renderings of their outputs.

Campaigns use common random numbers: for a given run seed, every strategy sees
the same target trajectory, drift resets, prediction noise, and link drops.
The learning engine and covariance-union fusion run stepwise; the memoryless
baselines run as equivalent vectorized array programs (cross-checked against
the per-instance fusion ops in the test suite).
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .baselines import (
    REG_LAMBDA,
    SINGULAR_EIG_TOL,
    FusionInput,
    FusionMember,
    fuse,
)
from .commgraph import BaseGraph, CommSnapshot
from .config import ScenarioConfig
from .engine import AgentState, phase1, phase2
from .geometry import Mat2, NonFiniteInput, RngStream, Vec2
from .world import (
    ControlParams,
    Pose,
    TargetInputSchedule,
    chase_command,
    clamp_control,
    collision_avoidance,
    heading_command,
    initial_robot_poses,
    step_kinematics,
    target_trajectory,
)

# substream ids carved out of each run's seed
STREAM_DRIFT = 0
STREAM_NOISE1 = 1
STREAM_NOISETAU = 2
STREAM_LINKS = 3
STREAM_SWEEP_GAMMA = 4

BATCHED_STRATEGIES = frozenset({"nocomm", "mean", "median", "greedy", "kf", "ci", "bf"})


class NumericalFailure(RuntimeError):
    """A run produced NaN/Inf; carries the offending step index."""

    def __init__(self, step: int, detail: str = ""):
        super().__init__(f"numerical failure at step {step}{': ' + detail if detail else ''}")
        self.step = step


class CampaignError(RuntimeError):
    """Raised when more than 1% of a campaign's runs fail."""


def resolve_workers(requested: Optional[int] = None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("D2EAL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# shared per-seed random inputs


@dataclass
class PreparedInputs:
    """Everything random a run consumes, drawn once per seed and shared by strategies."""

    seed: int
    target: np.ndarray  # (horizon + tau + 1, 2)
    drift_s: np.ndarray  # (horizon + 1, n) int
    gam: np.ndarray  # (horizon + 1, n)
    sig2: np.ndarray  # (horizon + 1, n)
    pred1: np.ndarray  # (horizon + 1, n, 2)
    predtau: np.ndarray  # (horizon + 1, n, 2); aliases pred1 when tau == 1
    kept: np.ndarray  # (horizon + 1, n_edges) bool
    drops: np.ndarray  # (horizon + 1,) int
    snapshots: list[CommSnapshot]
    neighbor_mask: np.ndarray  # (horizon + 1, n, n) bool, closed neighborhoods
    delta: Optional[np.ndarray] = None  # (horizon + 1,); delta[t] bounds f_{t,.}


def gamma_array(config: ScenarioConfig) -> np.ndarray:
    """gamma[t, i] for t = 0..horizon, matching GammaSchedule.value pointwise."""
    sched = config.gamma_schedule()
    t = np.arange(config.horizon + 1, dtype=np.float64)
    frac = t / config.horizon if config.horizon > 0 else t
    seg = np.searchsorted(np.asarray(sched.bounds), frac, side="right")
    seg = np.minimum(seg, len(sched.bounds) - 1)
    rows = np.asarray(sched.gammas)
    return rows[seg]


def compute_target_array(config: ScenarioConfig) -> np.ndarray:
    start = Pose(Vec2(0.0, 0.0), 0.0)
    poses = target_trajectory(start, config.target_schedule(), config.horizon + config.tau, config.dt)
    return np.array([[p.position.x, p.position.y] for p in poses])


def _drift_durations(uniforms: np.ndarray, p: float) -> np.ndarray:
    """Sustained-drift step counts from per-step reset uniforms.

    uniforms has shape (horizon, n); s[0] = 0 and s[t] = 0 when the reset fired
    between t-1 and t, else s[t-1] + 1.
    """
    horizon, n = uniforms.shape
    reset = np.empty((horizon + 1, n), dtype=bool)
    reset[0] = True
    reset[1:] = uniforms < p
    idx = np.arange(horizon + 1)[:, None]
    last_reset = np.maximum.accumulate(np.where(reset, idx, 0), axis=0)
    return idx - last_reset


def prepare_inputs(
    config: ScenarioConfig,
    seed: int,
    base: Optional[BaseGraph] = None,
    target: Optional[np.ndarray] = None,
    gam: Optional[np.ndarray] = None,
    with_delta: bool = False,
) -> PreparedInputs:
    base = base or config.base_graph()
    n = config.n
    horizon = config.horizon
    tau = config.tau
    if target is None:
        target = compute_target_array(config)
    if gam is None:
        gam = gamma_array(config)

    drift_u = RngStream(seed, STREAM_DRIFT).generator().random((horizon, n))
    if config.shared_drift_clock:
        drift_u = np.repeat(drift_u[:, :1], n, axis=1)
    drift_s = _drift_durations(drift_u, config.drift_reset_p)

    sigma = 10.0 * gam
    sig2 = sigma * sigma
    bias = gam * drift_s
    z1 = RngStream(seed, STREAM_NOISE1).generator().standard_normal((horizon + 1, n, 2))
    truth1 = target[1 : horizon + 2]  # y_{t+1} for t = 0..horizon
    pred1 = truth1[:, None, :] + bias[:, :, None] + sigma[:, :, None] * z1
    if tau == 1:
        predtau = pred1
    else:
        ztau = RngStream(seed, STREAM_NOISETAU).generator().standard_normal((horizon + 1, n, 2))
        truthtau = target[tau : horizon + tau + 1]
        predtau = truthtau[:, None, :] + bias[:, :, None] + sigma[:, :, None] * ztau

    n_edges = len(base.edges)
    if n_edges:
        link_u = RngStream(seed, STREAM_LINKS).generator().random((horizon + 1, n_edges))
        kept = link_u >= config.link_drop_p
    else:
        kept = np.ones((horizon + 1, 0), dtype=bool)
    drops = (n_edges - kept.sum(axis=1)).astype(np.int64)

    if config.link_drop_p == 0.0:
        snap0 = CommSnapshot(0, n, base.edges)
        snapshots = [snap0] * (horizon + 1)
    else:
        snapshots = [
            CommSnapshot(t, n, tuple(e for e, k in zip(base.edges, kept[t]) if k))
            for t in range(horizon + 1)
        ]

    mask = np.zeros((horizon + 1, n, n), dtype=bool)
    mask[:, np.arange(n), np.arange(n)] = True
    for e, (a, b) in enumerate(base.edges):
        ke = kept[:, e]
        mask[ke, a, b] = True
        mask[ke, b, a] = True

    delta = None
    if with_delta:
        diff = pred1[:, :, None, :] - pred1[:, None, :, :]
        div = np.sqrt((diff * diff).sum(-1)).max(axis=(1, 2)) if n > 1 else np.zeros(horizon + 1)
        # divergence of predictions formed at t bounds the losses at t+1
        delta = np.zeros(horizon + 2)
        delta[1:] = div
    return PreparedInputs(
        seed=seed, target=target, drift_s=drift_s, gam=gam, sig2=sig2,
        pred1=pred1, predtau=predtau, kept=kept, drops=drops,
        snapshots=snapshots, neighbor_mask=mask, delta=delta,
    )


# ---------------------------------------------------------------------------
# per-strategy runs


@dataclass
class StrategyRun:
    """Arrays indexed by iteration t = 0..horizon; loss rows are valid for t >= 1."""

    strategy: str
    n: int
    horizon: int
    expert_loss: np.ndarray
    stale_loss: np.ndarray
    individual_loss: np.ndarray
    social_loss: np.ndarray
    alpha: np.ndarray
    w_self: np.ndarray
    nrmcnt: np.ndarray
    w_rows: Optional[np.ndarray] = None
    fused1: Optional[np.ndarray] = None
    messages1: Optional[np.ndarray] = None  # one-step individual predictions broadcast
    poses: Optional[np.ndarray] = None
    flags: list[tuple[int, int, str]] = field(default_factory=list)

    def cumulative_social(self) -> np.ndarray:
        return np.cumsum(self.social_loss, axis=0)

    def totals(self) -> np.ndarray:
        return self.social_loss.sum(axis=0)


def _advance_robots(
    poses: list[Pose],
    fused_tau: Sequence[Vec2],
    target_now: Vec2,
    cparams: ControlParams,
    dt: float,
) -> tuple[list[Pose], list[tuple[int, str]]]:
    n = len(poses)
    positions = [p.position for p in poses]
    out = []
    flags: list[tuple[int, str]] = []
    for i in range(n):
        chase, f1 = chase_command(poses[i], target_now, fused_tau[i], cparams)
        if f1:
            flags.append((i, f1))
        if n >= 2:
            coll, f2 = collision_avoidance(i, positions, poses[i].heading, cparams)
            if f2:
                flags.append((i, f2))
            vx, vy = chase[0] + coll[0], chase[1] + coll[1]
        else:
            vx, vy = chase
        yaw, f3 = heading_command(poses[i], fused_tau[i], cparams)
        if f3:
            flags.append((i, f3))
        u = clamp_control(Vec2(vx, vy), yaw, cparams)
        out.append(step_kinematics(poses[i], u, dt))
    return out, flags


def _alloc(strategy: str, n: int, horizon: int, record_w: bool, record_fused: bool) -> StrategyRun:
    shape = (horizon + 1, n)
    return StrategyRun(
        strategy=strategy, n=n, horizon=horizon,
        expert_loss=np.zeros(shape), stale_loss=np.zeros(shape),
        individual_loss=np.zeros(shape), social_loss=np.zeros(shape),
        alpha=np.zeros(shape), w_self=np.ones(shape), nrmcnt=np.zeros(shape, dtype=np.int64),
        w_rows=np.zeros((horizon + 1, n, n)) if record_w else None,
        fused1=np.zeros((horizon + 1, n, 2)) if record_fused else None,
    )


def _run_d2eal(
    config: ScenarioConfig,
    pre: PreparedInputs,
    record_w: bool = False,
    record_fused: bool = False,
    motion: Optional[bool] = None,
) -> StrategyRun:
    n, horizon, tau = config.n, config.horizon, config.tau
    params = config.engine_params()
    motion = config.motion_enabled if motion is None else motion
    run = _alloc("d2eal", n, horizon, record_w, record_fused)
    if record_fused:
        run.messages1 = np.zeros((horizon + 1, n, 2))
    states = [AgentState(i) for i in range(n)]
    p1 = pre.pred1.tolist()
    ptau = p1 if tau == 1 else pre.predtau.tolist()
    tgt = pre.target.tolist()
    cparams = config.control_params()
    if motion:
        poses = initial_robot_poses(n, Vec2(tgt[0][0], tgt[0][1]))
        run.poses = np.zeros((horizon + 1, n, 3))
        run.poses[0] = [[p.position.x, p.position.y, p.heading] for p in poses]

    for t in range(horizon + 1):
        y = Vec2(tgt[t][0], tgt[t][1]) if t > 0 else None
        snap = pre.snapshots[t]
        neighbors = snap.neighbors
        msgs = []
        for i in range(n):
            r1 = p1[t][i]
            e1 = Vec2(r1[0], r1[1])
            if tau == 1:
                et = e1
            else:
                rt = ptau[t][i]
                et = Vec2(rt[0], rt[1])
            try:
                msg, losses, a = phase1(states[i], e1, et, y, t, params)
            except NonFiniteInput as e:
                raise NumericalFailure(t, str(e)) from e
            msgs.append(msg)
            if record_fused:
                run.messages1[t, i] = msg.f_individual_1
            if losses is not None:
                run.expert_loss[t, i] = losses.expert
                run.stale_loss[t, i] = losses.stale_social
                run.individual_loss[t, i] = losses.individual
                run.social_loss[t, i] = losses.social
            run.alpha[t, i] = a
            w = states[i].weights
            run.w_self[t, i] = w.w_hat_self
            run.nrmcnt[t, i] = w.nrmcnt
        fused_tau: list[Vec2] = []
        for i in range(n):
            inbox = [msgs[j] for j in neighbors[i]]
            res = phase2(states[i], msgs[i], inbox)
            fused_tau.append(res.f_social_tau)
            if not (math.isfinite(res.f_social_1[0]) and math.isfinite(res.f_social_1[1])):
                raise NumericalFailure(t, f"robot {i} social prediction")
            if record_fused:
                run.fused1[t, i] = res.f_social_1
            if record_w:
                for sender, wv in res.weights:
                    run.w_rows[t, i, sender] = wv
            if res.flag:
                run.flags.append((t, i, res.flag))
        if motion and t < horizon:
            poses, move_flags = _advance_robots(poses, fused_tau, Vec2(tgt[t][0], tgt[t][1]), cparams, config.dt)
            for i, fl in move_flags:
                run.flags.append((t, i, fl))
            for i, p in enumerate(poses):
                if not (math.isfinite(p.position.x) and math.isfinite(p.position.y)):
                    raise NumericalFailure(t, f"robot {i} pose")
                run.poses[t + 1, i] = (p.position.x, p.position.y, p.heading)
    return run


def _run_stepwise_baseline(
    config: ScenarioConfig,
    pre: PreparedInputs,
    strategy: str,
    record_fused: bool = False,
    motion: Optional[bool] = None,
) -> StrategyRun:
    """Reference per-step driver for the memoryless strategies."""
    n, horizon, tau = config.n, config.horizon, config.tau
    scale = config.loss_scale
    motion = config.motion_enabled if motion is None else motion
    run = _alloc(strategy, n, horizon, False, record_fused)
    p1 = pre.pred1.tolist()
    ptau = p1 if tau == 1 else pre.predtau.tolist()
    sig2 = pre.sig2.tolist()
    tgt = pre.target.tolist()
    cparams = config.control_params()
    cu_rule = config.effective_cu_mean_rule()
    cum = [0.0] * n
    prev_fused: list[Optional[Vec2]] = [None] * n
    if motion:
        poses = initial_robot_poses(n, Vec2(tgt[0][0], tgt[0][1]))
        run.poses = np.zeros((horizon + 1, n, 3))
        run.poses[0] = [[p.position.x, p.position.y, p.heading] for p in poses]

    from .geometry import loss as loss_fn

    for t in range(horizon + 1):
        if t > 0:
            y = Vec2(tgt[t][0], tgt[t][1])
            for i in range(n):
                try:
                    le = loss_fn(Vec2(p1[t - 1][i][0], p1[t - 1][i][1]), y, scale)
                    run.social_loss[t, i] = loss_fn(prev_fused[i], y, scale)
                except NonFiniteInput as e:
                    raise NumericalFailure(t, str(e)) from e
                run.expert_loss[t, i] = le
                run.individual_loss[t, i] = le
                cum[i] += le
            if t % config.reset_period == 0:
                cum = [0.0] * n
        snap = pre.snapshots[t]
        fused_tau: list[Vec2] = []
        for i in range(n):
            lam = snap.closed_neighborhood(i)
            members = tuple(
                FusionMember(
                    j,
                    Vec2(p1[t][j][0], p1[t][j][1]),
                    Mat2(sig2[t][j], 0.0, 0.0, sig2[t][j]),
                    cum[j],
                )
                for j in lam
            )
            inputs = FusionInput(own_id=i, members=members)
            fp = fuse(strategy, inputs, ci_exact=config.ci_exact, cu_mean_rule=cu_rule)
            if not (math.isfinite(fp.mean[0]) and math.isfinite(fp.mean[1])):
                raise NumericalFailure(t, f"robot {i} fused prediction")
            prev_fused[i] = fp.mean
            for _, fl in enumerate(fp.flags):
                run.flags.append((t, i, fl))
            if record_fused:
                run.fused1[t, i] = fp.mean
            if tau == 1:
                fused_tau.append(fp.mean)
            else:
                members_tau = tuple(
                    FusionMember(
                        j,
                        Vec2(ptau[t][j][0], ptau[t][j][1]),
                        Mat2(sig2[t][j], 0.0, 0.0, sig2[t][j]),
                        cum[j],
                    )
                    for j in lam
                )
                fptau = fuse(
                    strategy, FusionInput(own_id=i, members=members_tau),
                    ci_exact=config.ci_exact, cu_mean_rule=cu_rule,
                )
                fused_tau.append(fptau.mean)
        if motion and t < horizon:
            poses, move_flags = _advance_robots(poses, fused_tau, Vec2(tgt[t][0], tgt[t][1]), cparams, config.dt)
            for i, fl in move_flags:
                run.flags.append((t, i, fl))
            for i, p in enumerate(poses):
                if not (math.isfinite(p.position.x) and math.isfinite(p.position.y)):
                    raise NumericalFailure(t, f"robot {i} pose")
                run.poses[t + 1, i] = (p.position.x, p.position.y, p.heading)
    return run


def _segmented_cumsum(values: np.ndarray, period: int) -> np.ndarray:
    """Shared cumulative expert losses with the periodic reset applied.

    out[t, i] is the running sum since the last reset boundary at or before t
    (boundaries at t = 0, period, 2*period, ...), matching an incremental
    accumulator that adds l_t and then zeroes itself on reset steps.
    """
    horizon = values.shape[0] - 1
    out = np.zeros_like(values)
    start = 0
    while start <= horizon:
        end = min(start + period, horizon + 1)
        seg = values[start + 1 : end]
        if len(seg):
            out[start + 1 : end] = np.cumsum(seg, axis=0)
        start = end
    return out


def _run_batched_baseline(
    config: ScenarioConfig,
    pre: PreparedInputs,
    strategy: str,
    record_fused: bool = False,
    motion: Optional[bool] = None,
) -> StrategyRun:
    """Vectorized runner for the memoryless strategies (isotropic covariances)."""
    n, horizon, tau = config.n, config.horizon, config.tau
    scale = config.loss_scale
    motion = config.motion_enabled if motion is None else motion
    run = _alloc(strategy, n, horizon, False, record_fused)
    p1 = pre.pred1
    ptau = pre.predtau
    mask = pre.neighbor_mask
    y = pre.target[1 : horizon + 1]  # observed outcomes at t = 1..horizon

    d = p1[:horizon] - y[:, None, :]
    expert = np.minimum(np.hypot(d[..., 0], d[..., 1]) / scale, 1.0)
    run.expert_loss[1:] = expert
    run.individual_loss[1:] = expert

    if strategy == "nocomm":
        fused1 = p1
        fusedtau = ptau
    elif strategy in ("mean", "kf", "ci", "bf"):
        if strategy == "mean":
            v = mask.astype(np.float64)
        elif strategy in ("kf", "bf"):
            sig2 = np.where(pre.sig2 < SINGULAR_EIG_TOL, pre.sig2 + REG_LAMBDA, pre.sig2)
            v = mask * (1.0 / sig2)[:, None, :]
        else:  # ci, inverse-trace heuristic: omega_j / sigma2_j
            sig2 = np.where(pre.sig2 < SINGULAR_EIG_TOL, pre.sig2 + REG_LAMBDA, pre.sig2)
            om = mask * (1.0 / (2.0 * sig2))[:, None, :]
            om = om / om.sum(axis=2, keepdims=True)
            v = om / sig2[:, None, :]
        denom = v.sum(axis=2, keepdims=True)
        fused1 = np.einsum("tij,tjc->tic", v, p1) / denom
        fusedtau = fused1 if tau == 1 else np.einsum("tij,tjc->tic", v, ptau) / denom
    elif strategy == "median":
        px = np.where(mask, p1[:, None, :, 0], np.nan)
        py = np.where(mask, p1[:, None, :, 1], np.nan)
        fused1 = np.stack([np.nanmedian(px, axis=2), np.nanmedian(py, axis=2)], axis=-1)
        if tau == 1:
            fusedtau = fused1
        else:
            qx = np.where(mask, ptau[:, None, :, 0], np.nan)
            qy = np.where(mask, ptau[:, None, :, 1], np.nan)
            fusedtau = np.stack([np.nanmedian(qx, axis=2), np.nanmedian(qy, axis=2)], axis=-1)
    elif strategy == "greedy":
        cum = _segmented_cumsum(run.expert_loss, config.reset_period)
        keyed = np.where(mask, cum[:, None, :], np.inf)
        best = keyed.min(axis=2, keepdims=True)
        is_min = keyed == best
        own_is_min = is_min[:, np.arange(n), np.arange(n)]
        first_min = is_min.argmax(axis=2)
        choice = np.where(own_is_min, np.arange(n)[None, :], first_min)
        trows = np.arange(horizon + 1)[:, None]
        fused1 = p1[trows, choice]
        fusedtau = fused1 if tau == 1 else ptau[trows, choice]
    else:
        raise ValueError(f"strategy {strategy!r} has no batched runner")

    if not np.isfinite(fused1[..., 0]).all():
        bad = int(np.argwhere(~np.isfinite(fused1[..., 0]))[0][0])
        raise NumericalFailure(bad, "fused prediction")
    ds = fused1[:horizon] - y[:, None, :]
    run.social_loss[1:] = np.minimum(np.hypot(ds[..., 0], ds[..., 1]) / scale, 1.0)
    if record_fused:
        run.fused1[:] = fused1

    if motion:
        cparams = config.control_params()
        tgt = pre.target.tolist()
        ft = fusedtau.tolist()
        poses = initial_robot_poses(n, Vec2(tgt[0][0], tgt[0][1]))
        run.poses = np.zeros((horizon + 1, n, 3))
        run.poses[0] = [[p.position.x, p.position.y, p.heading] for p in poses]
        for t in range(horizon):
            fts = [Vec2(ft[t][i][0], ft[t][i][1]) for i in range(n)]
            poses, move_flags = _advance_robots(poses, fts, Vec2(tgt[t][0], tgt[t][1]), cparams, config.dt)
            for i, fl in move_flags:
                run.flags.append((t, i, fl))
            for i, p in enumerate(poses):
                if not (math.isfinite(p.position.x) and math.isfinite(p.position.y)):
                    raise NumericalFailure(t, f"robot {i} pose")
                run.poses[t + 1, i] = (p.position.x, p.position.y, p.heading)
    return run


def run_strategy(
    config: ScenarioConfig,
    pre: PreparedInputs,
    strategy: Optional[str] = None,
    record_w: bool = False,
    record_fused: bool = False,
    motion: Optional[bool] = None,
    force_stepwise: bool = False,
) -> StrategyRun:
    strategy = strategy or config.fusion
    if strategy == "d2eal":
        return _run_d2eal(config, pre, record_w=record_w, record_fused=record_fused, motion=motion)
    if not force_stepwise and strategy in BATCHED_STRATEGIES and not (
        strategy == "ci" and config.ci_exact
    ):
        return _run_batched_baseline(config, pre, strategy, record_fused=record_fused, motion=motion)
    return _run_stepwise_baseline(config, pre, strategy, record_fused=record_fused, motion=motion)


# ---------------------------------------------------------------------------
# single runs with full logs


@dataclass
class StepLog:
    """One (step, robot) record of a full run."""

    t: int
    robot: int
    x: float
    y: float
    heading: float
    target_x: float
    target_y: float
    expert_loss: float
    stale_social_loss: float
    individual_loss: float
    social_loss: float
    alpha: float
    w_hat_self: float
    nrmcnt: int
    w_row: tuple[float, ...]
    flags: tuple[str, ...]


@dataclass
class RunSummary:
    strategy: str
    n: int
    horizon: int
    seed: int
    dt: float
    total_social_loss: float
    social_loss_per_robot: list[float]
    expert_loss_per_robot: list[float]
    individual_loss_per_robot: list[float]
    delta_sum: float
    assumption1_violation_fraction: float
    flag_counts: dict[str, int]


@dataclass
class RunResult:
    config: ScenarioConfig
    seed: int
    pre: PreparedInputs
    run: StrategyRun

    def step_logs(self) -> list[StepLog]:
        return build_step_logs(self)

    def summary(self) -> RunSummary:
        return build_summary(self)


def assumption1_violation_fraction(pre: PreparedInputs, base: BaseGraph) -> float:
    """Fraction of (t, i) pairs where some neighbor appears that was absent at t-1."""
    horizon = len(pre.snapshots) - 1
    if horizon < 1:
        return 0.0
    n = base.n
    incident = [[e for e, (a, b) in enumerate(base.edges) if i in (a, b)] for i in range(n)]
    kept = pre.kept
    violations = 0
    for t in range(1, horizon + 1):
        for i in range(n):
            for e in incident[i]:
                if kept[t, e] and not kept[t - 1, e]:
                    violations += 1
                    break
    return violations / (horizon * n)


def execute_run(
    config: ScenarioConfig,
    seed: Optional[int] = None,
    record_w: bool = True,
    record_fused: bool = False,
    with_delta: bool = True,
) -> RunResult:
    seed = config.seed if seed is None else seed
    pre = prepare_inputs(config, seed, with_delta=with_delta)
    run = run_strategy(config, pre, record_w=record_w, record_fused=record_fused)
    return RunResult(config=config, seed=seed, pre=pre, run=run)


def run_once(config: ScenarioConfig, seed: Optional[int] = None) -> tuple[list[StepLog], RunSummary]:
    """Execute one fully logged run of the configured strategy."""
    result = execute_run(config, seed)
    return result.step_logs(), result.summary()


def build_step_logs(result: RunResult) -> list[StepLog]:
    run = result.run
    n, horizon = run.n, run.horizon
    tgt = result.pre.target
    flag_map: dict[tuple[int, int], list[str]] = {}
    for t, i, fl in run.flags:
        flag_map.setdefault((t, i), []).append(fl)
    poses = run.poses
    logs = []
    for t in range(1, horizon + 1):
        for i in range(n):
            if poses is not None:
                px, py, ph = poses[t, i]
            else:
                px = py = ph = 0.0
            w_row = tuple(run.w_rows[t, i]) if run.w_rows is not None else ()
            logs.append(
                StepLog(
                    t=t, robot=i, x=float(px), y=float(py), heading=float(ph),
                    target_x=float(tgt[t, 0]), target_y=float(tgt[t, 1]),
                    expert_loss=float(run.expert_loss[t, i]),
                    stale_social_loss=float(run.stale_loss[t, i]),
                    individual_loss=float(run.individual_loss[t, i]),
                    social_loss=float(run.social_loss[t, i]),
                    alpha=float(run.alpha[t, i]),
                    w_hat_self=float(run.w_self[t, i]),
                    nrmcnt=int(run.nrmcnt[t, i]),
                    w_row=w_row,
                    flags=tuple(flag_map.get((t, i), ())),
                )
            )
    return logs


def build_summary(result: RunResult) -> RunSummary:
    run = result.run
    config = result.config
    flag_counts: dict[str, int] = {}
    for _, _, fl in run.flags:
        flag_counts[fl] = flag_counts.get(fl, 0) + 1
    delta_sum = float(result.pre.delta[1 : run.horizon + 1].sum()) if result.pre.delta is not None else 0.0
    return RunSummary(
        strategy=run.strategy, n=run.n, horizon=run.horizon, seed=result.seed, dt=config.dt,
        total_social_loss=float(run.social_loss.sum()),
        social_loss_per_robot=[float(v) for v in run.social_loss.sum(axis=0)],
        expert_loss_per_robot=[float(v) for v in run.expert_loss.sum(axis=0)],
        individual_loss_per_robot=[float(v) for v in run.individual_loss.sum(axis=0)],
        delta_sum=delta_sum,
        assumption1_violation_fraction=assumption1_violation_fraction(result.pre, config.base_graph()),
        flag_counts=flag_counts,
    )


# ---------------------------------------------------------------------------
# campaigns


@dataclass
class SeedOutcome:
    seed: int
    curves: dict[str, np.ndarray]  # strategy -> (horizon+1, n) cumulative social loss
    failed: dict[str, int]  # strategy -> failing step


def _run_seed(
    config: ScenarioConfig,
    seed: int,
    strategies: Sequence[str],
    motion: bool,
    target: Optional[np.ndarray] = None,
    gam: Optional[np.ndarray] = None,
    base: Optional[BaseGraph] = None,
) -> SeedOutcome:
    pre = prepare_inputs(config, seed, base=base, target=target, gam=gam)
    curves: dict[str, np.ndarray] = {}
    failed: dict[str, int] = {}
    for strat in strategies:
        try:
            run = run_strategy(config, pre, strategy=strat, motion=motion)
            curves[strat] = run.cumulative_social()
        except NumericalFailure as e:
            failed[strat] = e.step
    return SeedOutcome(seed=seed, curves=curves, failed=failed)


def _campaign_worker(payload) -> SeedOutcome:
    config_dict, seed, strategies, motion = payload
    config = ScenarioConfig.model_validate(config_dict)
    return _run_seed(config, seed, strategies, motion)


def run_campaign(
    config: ScenarioConfig,
    seeds: Sequence[int],
    strategies: Sequence[str],
    motion: bool = True,
    workers: Optional[int] = None,
) -> list[SeedOutcome]:
    """All (seed, strategy) runs with common random numbers per seed.

    Results are reduced in seed order, so worker count never changes output.
    """
    workers = min(resolve_workers(workers), len(seeds))
    if workers <= 1:
        target = compute_target_array(config)
        gam = gamma_array(config)
        base = config.base_graph()
        return [
            _run_seed(config, s, strategies, motion, target=target, gam=gam, base=base)
            for s in seeds
        ]
    payloads = [(config.model_dump(), s, tuple(strategies), motion) for s in seeds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(_campaign_worker, payloads))
    return sorted(outcomes, key=lambda o: o.seed)


def _check_failures(outcomes: list[SeedOutcome], strategies: Sequence[str]) -> list[tuple[int, str, int]]:
    failures = [
        (o.seed, strat, step) for o in outcomes for strat, step in sorted(o.failed.items())
    ]
    total = len(outcomes) * len(strategies)
    if total and len(failures) / total > 0.01:
        raise CampaignError(f"{len(failures)}/{total} runs failed: {failures[:10]}")
    return failures


@dataclass
class CampaignResult:
    strategies: list[str]
    seeds: list[int]
    n: int
    horizon: int
    mean_cum: dict[str, np.ndarray]  # strategy -> (horizon+1, n) mean cumulative curves
    total_mean: dict[str, np.ndarray]  # strategy -> (horizon+1,) mean total curve
    total_std: dict[str, np.ndarray]  # strategy -> (horizon+1,) std of total curve
    totals: dict[str, float]  # strategy -> mean final total
    totals_std: dict[str, float]
    per_robot_totals: dict[str, np.ndarray]  # strategy -> (n,) mean final per robot
    failures: list[tuple[int, str, int]]


def aggregate_campaign(
    outcomes: list[SeedOutcome], strategies: Sequence[str], n: int, horizon: int
) -> CampaignResult:
    failures = _check_failures(outcomes, strategies)
    mean_cum = {}
    total_mean = {}
    total_std = {}
    totals = {}
    totals_std = {}
    per_robot = {}
    for strat in strategies:
        curves = [o.curves[strat] for o in outcomes if strat in o.curves]
        stack_total = np.stack([c.sum(axis=1) for c in curves])
        acc = np.zeros((horizon + 1, n))
        for c in curves:
            acc += c
        mean_cum[strat] = acc / len(curves)
        total_mean[strat] = stack_total.mean(axis=0)
        total_std[strat] = stack_total.std(axis=0)
        totals[strat] = float(stack_total[:, -1].mean())
        totals_std[strat] = float(stack_total[:, -1].std())
        per_robot[strat] = mean_cum[strat][-1]
    return CampaignResult(
        strategies=list(strategies), seeds=[o.seed for o in outcomes], n=n, horizon=horizon,
        mean_cum=mean_cum, total_mean=total_mean, total_std=total_std,
        totals=totals, totals_std=totals_std, per_robot_totals=per_robot, failures=failures,
    )


def monte_carlo(
    config: ScenarioConfig,
    num_runs: Optional[int] = None,
    workers: Optional[int] = None,
    motion: Optional[bool] = None,
) -> CampaignResult:
    """Seed-averaged campaign for the configured strategy (seeds seed..seed+runs-1)."""
    runs = config.num_runs if num_runs is None else num_runs
    seeds = [config.seed + k for k in range(runs)]
    motion = config.motion_enabled if motion is None else motion
    outcomes = run_campaign(config, seeds, [config.fusion], motion=motion, workers=workers)
    return aggregate_campaign(outcomes, [config.fusion], config.n, config.horizon)


def compare_strategies(
    config: ScenarioConfig,
    num_runs: Optional[int] = None,
    strategies: Optional[Sequence[str]] = None,
    workers: Optional[int] = None,
    motion: Optional[bool] = None,
) -> CampaignResult:
    """All strategies on one scenario with common random numbers."""
    from .baselines import STRATEGIES

    runs = config.num_runs if num_runs is None else num_runs
    strategies = list(strategies) if strategies else list(STRATEGIES)
    seeds = [config.seed + k for k in range(runs)]
    motion = config.motion_enabled if motion is None else motion
    outcomes = run_campaign(config, seeds, strategies, motion=motion, workers=workers)
    return aggregate_campaign(outcomes, strategies, config.n, config.horizon)


DEFAULT_SWEEP_N = (2, 4, 6, 8, 10, 12, 16, 20)
DEFAULT_SWEEP_STRATEGIES = ("d2eal", "nocomm", "kf", "ci", "bf")

SWEEP_GAMMA_GOOD = 0.01
SWEEP_GAMMA_BAD = 0.8


@dataclass
class SweepResult:
    n_values: list[int]
    strategies: list[str]
    runs: int
    # per strategy: list over n_values of (mean, std) of per-robot average cumulative loss
    per_robot_avg: dict[str, list[float]]
    per_robot_std: dict[str, list[float]]
    reliability_cost: list[float]


def _sweep_config(config: ScenarioConfig, n: int) -> ScenarioConfig:
    return config.model_copy(
        update={
            "n": n,
            "topology": "path",
            "gamma": config.gamma.model_copy(
                update={"kind": "constant", "values": [SWEEP_GAMMA_GOOD] * n}
            ),
        }
    )


def _sweep_seed_worker(payload) -> tuple[int, int, dict[str, float]]:
    config_dict, n, seed, strategies = payload
    config = ScenarioConfig.model_validate(config_dict)
    return _sweep_seed(config, n, seed, strategies)


def _sweep_seed(
    config: ScenarioConfig, n: int, seed: int, strategies: Sequence[str],
    target: Optional[np.ndarray] = None,
) -> tuple[int, int, dict[str, float]]:
    """One (n, seed) sweep cell; returns per-strategy per-robot average cumulative loss.

    The two endpoint robots keep gammas 0.01 and 0.8; robots inserted between
    them draw gamma = unif(0,2) * (0.01+0.8)/2 once per run.
    """
    cell = _sweep_config(config, n)
    gammas = [SWEEP_GAMMA_GOOD] * n
    gammas[-1] = SWEEP_GAMMA_BAD
    if n > 2:
        u = RngStream(seed, STREAM_SWEEP_GAMMA).generator().random(n - 2)
        mid = 0.5 * (SWEEP_GAMMA_GOOD + SWEEP_GAMMA_BAD)
        for k in range(1, n - 1):
            gammas[k] = float(u[k - 1] * 2.0 * mid)
    gam = np.broadcast_to(np.asarray(gammas), (cell.horizon + 1, n)).copy()
    pre = prepare_inputs(cell, seed, target=target, gam=gam)
    out = {}
    for strat in strategies:
        run = run_strategy(cell, pre, strategy=strat, motion=False)
        out[strat] = float(run.social_loss.sum() / n)
    return n, seed, out


def scalability_sweep(
    config: ScenarioConfig,
    n_values: Sequence[int] = DEFAULT_SWEEP_N,
    strategies: Sequence[str] = DEFAULT_SWEEP_STRATEGIES,
    num_runs: Optional[int] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    """Average cumulative loss per robot versus fleet size.

    Motion is skipped here: the prediction losses do not depend on robot poses,
    and the sweep only reports loss statistics.
    """
    for n in n_values:
        if n < 2:
            raise ValueError("sweep n values must be >= 2")
    runs = config.num_runs if num_runs is None else num_runs
    seeds = [config.seed + k for k in range(runs)]
    workers = min(resolve_workers(workers), len(seeds) * len(n_values))
    cells: dict[tuple[int, int], dict[str, float]] = {}
    if workers <= 1:
        target = compute_target_array(config)
        for n in n_values:
            for seed in seeds:
                key_n, key_s, vals = _sweep_seed(config, n, seed, strategies, target=target)
                cells[(key_n, key_s)] = vals
    else:
        payloads = [
            (config.model_dump(), n, seed, tuple(strategies))
            for n in n_values
            for seed in seeds
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key_n, key_s, vals in pool.map(_sweep_seed_worker, payloads):
                cells[(key_n, key_s)] = vals
    per_avg: dict[str, list[float]] = {s: [] for s in strategies}
    per_std: dict[str, list[float]] = {s: [] for s in strategies}
    for n in n_values:
        for strat in strategies:
            vals = np.array([cells[(n, seed)][strat] for seed in seeds])
            per_avg[strat].append(float(vals.mean()))
            per_std[strat].append(float(vals.std()))
    rel = [config.reliability_cost_scale / n for n in n_values]
    return SweepResult(
        n_values=list(n_values), strategies=list(strategies), runs=runs,
        per_robot_avg=per_avg, per_robot_std=per_std, reliability_cost=rel,
    )


# ---------------------------------------------------------------------------
# renderings


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def steps_csv(result: RunResult) -> str:
    n = result.run.n
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = [
        "t", "robot", "x", "y", "heading", "target_x", "target_y",
        "expert_loss", "stale_social_loss", "individual_loss", "social_loss",
        "alpha", "w_hat_self", "nrmcnt",
    ] + [f"w_{j + 1}" for j in range(n)] + ["flags"]
    w.writerow(header)
    for log in result.step_logs():
        w_row = log.w_row if log.w_row else (0.0,) * n
        w.writerow(
            [log.t, log.robot + 1]
            + [_fmt(v) for v in (
                log.x, log.y, log.heading, log.target_x, log.target_y,
                log.expert_loss, log.stale_social_loss, log.individual_loss,
                log.social_loss, log.alpha, log.w_hat_self,
            )]
            + [str(log.nrmcnt)]
            + [_fmt(v) for v in w_row]
            + [";".join(log.flags)]
        )
    return buf.getvalue()


def linkdrops_csv(result: RunResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "dropped"])
    for t, d in enumerate(result.pre.drops):
        w.writerow([t, int(d)])
    return buf.getvalue()


def linkdrop_hist_csv(result: RunResult) -> str:
    """Histogram-ready percentage frequencies of per-step dropped-link counts."""
    n_edges = result.pre.kept.shape[1]
    counts = np.bincount(result.pre.drops, minlength=n_edges + 1)
    total = counts.sum()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dropped", "steps", "percent"])
    for k in range(n_edges + 1):
        w.writerow([k, int(counts[k]), _fmt(100.0 * counts[k] / total)])
    return buf.getvalue()


def curves_csv(result: CampaignResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["strategy", "t", "total_mean", "total_std"] + [
        f"robot{j + 1}_mean" for j in range(result.n)
    ]
    w.writerow(header)
    for strat in result.strategies:
        mc = result.mean_cum[strat]
        tm = result.total_mean[strat]
        ts = result.total_std[strat]
        for t in range(result.horizon + 1):
            w.writerow(
                [strat, t, _fmt(tm[t]), _fmt(ts[t])] + [_fmt(mc[t, j]) for j in range(result.n)]
            )
    return buf.getvalue()


def comparison_csv(result: CampaignResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["strategy", "runs", "total_mean", "total_std", "per_robot_avg"] + [
        f"robot{j + 1}_mean" for j in range(result.n)
    ]
    w.writerow(header)
    for strat in result.strategies:
        per = result.per_robot_totals[strat]
        w.writerow(
            [strat, len(result.seeds), _fmt(result.totals[strat]), _fmt(result.totals_std[strat]),
             _fmt(result.totals[strat] / result.n)]
            + [_fmt(v) for v in per]
        )
    return buf.getvalue()


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["strategy", "n", "runs", "per_robot_avg_mean", "per_robot_avg_std", "reliability_cost"])
    for strat in result.strategies:
        for idx, n in enumerate(result.n_values):
            w.writerow(
                [strat, n, result.runs, _fmt(result.per_robot_avg[strat][idx]),
                 _fmt(result.per_robot_std[strat][idx]), _fmt(result.reliability_cost[idx])]
            )
    return buf.getvalue()
