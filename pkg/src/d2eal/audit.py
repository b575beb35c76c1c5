"""Empirical regret measurements against their worst-case bounds, plus
weight-convergence verdicts, computed from run logs after the fact.

The audit never mutates simulation state; it reads the logged loss series and
fusion weights and reports each inequality as a literal comparison. The strict
regret statements assume a fixed neighborhood structure and no periodic reset;
runs outside that regime are still audited, with the violation fraction of the
shrinking-neighborhood assumption reported alongside.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .harness import RunResult, assumption1_violation_fraction


@dataclass
class RobotRegretAudit:
    robot: int
    expert_cum: float
    individual_cum: float
    social_cum: float
    stale_cum: float
    d0: int
    individual_regret: float
    individual_bound: float
    individual_holds: bool
    social_regret: float
    social_bound: float
    social_holds: bool
    global_individual_regret: float
    global_individual_bound: float
    global_individual_holds: bool
    best_expert_regret: float
    best_expert_bound: float
    best_expert_holds: bool
    global_social_regret: float
    global_social_bound: float
    global_social_holds: bool
    optimal_eta_w: float
    optimal_social_bound: float


@dataclass
class BoundAudit:
    horizon: int
    eta_alpha: float
    eta_w: float
    lipschitz: float
    delta_sum: float
    best_expert: int
    best_individual: int
    sublinearity_c0: float
    sublinearity_alpha: float
    optimal_eta_alpha: float
    optimal_individual_bound: float
    reset_enabled: bool
    assumption1_violation_fraction: float
    robots: list[RobotRegretAudit] = field(default_factory=list)

    def all_hold(self) -> bool:
        return all(
            r.individual_holds and r.social_holds and r.global_individual_holds
            for r in self.robots
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _fit_sublinearity(cum_best: np.ndarray, horizon: int) -> tuple[float, float]:
    """Least-squares fit of cumulative best-expert loss to c0 * t^(1-alpha).

    Fit runs over the last half of the horizon to skip the transient; a
    zero-loss best expert short-circuits to c0 = 0.
    """
    if cum_best[horizon] <= 0.0:
        return 0.0, 1.0
    ts = np.arange(max(2, horizon // 2), horizon + 1)
    vals = cum_best[ts]
    ok = vals > 0.0
    if ok.sum() < 2:
        return float(cum_best[horizon] / horizon), 0.0
    slope, intercept = np.polyfit(np.log(ts[ok]), np.log(vals[ok]), 1)
    return float(math.exp(intercept)), float(1.0 - slope)


def audit_bounds(result: RunResult) -> BoundAudit:
    config = result.config
    run = result.run
    horizon = run.horizon
    n = run.n
    eta_a = config.eta_alpha
    eta_w = config.eta_w
    l1 = 1.0 / config.loss_scale

    expert_cum = run.expert_loss.sum(axis=0)
    individual_cum = run.individual_loss.sum(axis=0)
    social_cum = run.social_loss.sum(axis=0)
    stale_cum = run.stale_loss.sum(axis=0)
    delta_sum = float(result.pre.delta[1 : horizon + 1].sum()) if result.pre.delta is not None else 0.0

    i_star = int(np.argmin(expert_cum))
    j_star = int(np.argmin(individual_cum))
    cum_best = np.cumsum(run.expert_loss[:, i_star])
    c0, alpha_fit = _fit_sublinearity(cum_best, horizon)

    base = config.base_graph()
    base_degrees = [1] * n
    for a, b in base.edges:
        base_degrees[a] += 1
        base_degrees[b] += 1

    bound_i = eta_a * horizon / 8.0 + math.log(2.0) / eta_a
    final_lambda = [result.pre.snapshots[horizon].closed_neighborhood(i) for i in range(n)]

    robots = []
    tol = 1e-9
    for i in range(n):
        d0 = base_degrees[i]
        r_i = float(individual_cum[i] - min(expert_cum[i], stale_cum[i]))
        bound_s = eta_w * horizon / 8.0 + math.log(d0) / eta_w
        r_s = float(social_cum[i] - min(individual_cum[j] for j in final_lambda[i]))
        r_gi = float(individual_cum[i] - expert_cum[i_star])
        bound_gi = bound_i + l1 * delta_sum
        r_be = float(social_cum[i] - expert_cum[i_star])
        bound_be = bound_s + bound_i + l1 * delta_sum
        r_gs = float(social_cum[i] - individual_cum[j_star])
        bound_gs = bound_be + c0 * horizon ** (1.0 - alpha_fit)
        robots.append(
            RobotRegretAudit(
                robot=i,
                expert_cum=float(expert_cum[i]),
                individual_cum=float(individual_cum[i]),
                social_cum=float(social_cum[i]),
                stale_cum=float(stale_cum[i]),
                d0=d0,
                individual_regret=r_i,
                individual_bound=bound_i,
                individual_holds=r_i <= bound_i + tol,
                social_regret=r_s,
                social_bound=bound_s,
                social_holds=r_s <= bound_s + tol,
                global_individual_regret=r_gi,
                global_individual_bound=bound_gi,
                global_individual_holds=r_gi <= bound_gi + tol,
                best_expert_regret=r_be,
                best_expert_bound=bound_be,
                best_expert_holds=r_be <= bound_be + tol,
                global_social_regret=r_gs,
                global_social_bound=bound_gs,
                global_social_holds=r_gs <= bound_gs + tol,
                optimal_eta_w=math.sqrt(8.0 * math.log(d0) / horizon) if d0 > 1 else 0.0,
                optimal_social_bound=math.sqrt(horizon / 2.0 * math.log(d0)),
            )
        )
    return BoundAudit(
        horizon=horizon,
        eta_alpha=eta_a,
        eta_w=eta_w,
        lipschitz=l1,
        delta_sum=delta_sum,
        best_expert=i_star,
        best_individual=j_star,
        sublinearity_c0=c0,
        sublinearity_alpha=alpha_fit,
        optimal_eta_alpha=math.sqrt(8.0 * math.log(2.0) / horizon),
        optimal_individual_bound=math.sqrt(horizon / 2.0 * math.log(2.0)),
        reset_enabled=config.reset_enabled,
        assumption1_violation_fraction=assumption1_violation_fraction(result.pre, base),
        robots=robots,
    )


@dataclass
class RobotConvergenceAudit:
    robot: int
    best_neighbor_final: int
    weight_on_best_final: float
    converged: bool  # weight on the least-cumulative-loss neighbor reached 0.99
    first_step_at_099: Optional[int]
    margin_mean_last_half: float


@dataclass
class ConvergenceAudit:
    threshold: float
    robots: list[RobotConvergenceAudit] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def audit_convergence(result: RunResult, threshold: float = 0.99) -> ConvergenceAudit:
    """Track each robot's fusion weight on its least-cumulative-loss neighbor."""
    run = result.run
    if run.w_rows is None:
        raise ValueError("convergence audit needs a run recorded with fusion weights")
    horizon, n = run.horizon, run.n
    cum_individual = np.cumsum(run.individual_loss, axis=0)
    robots = []
    for i in range(n):
        w_on_best = np.zeros(horizon + 1)
        j_best_final = i
        margins = []
        for t in range(horizon + 1):
            lam = result.pre.snapshots[t].closed_neighborhood(i)
            j_best = min(lam, key=lambda j: (cum_individual[t, j], j))
            w_on_best[t] = run.w_rows[t, i, j_best]
            j_best_final = j_best
            if t >= 1 and len(lam) > 1:
                others = [cum_individual[t, j] - cum_individual[t, j_best] for j in lam if j != j_best]
                margins.append(min(others) / t)
        reached = np.nonzero(w_on_best >= threshold)[0]
        last_half = margins[len(margins) // 2 :]
        robots.append(
            RobotConvergenceAudit(
                robot=i,
                best_neighbor_final=j_best_final,
                weight_on_best_final=float(w_on_best[horizon]),
                converged=bool(w_on_best[horizon] >= threshold),
                first_step_at_099=int(reached[0]) if len(reached) else None,
                margin_mean_last_half=float(np.mean(last_half)) if last_half else 0.0,
            )
        )
    return ConvergenceAudit(threshold=threshold, robots=robots)


def convergence_step_bound(n: int, eta_w: float, epsilon: float, threshold: float = 0.99) -> int:
    """Closed-form step count for the weight on the best member to cross `threshold`
    when every other member's cumulative loss grows at least `epsilon` per step."""
    return math.ceil(math.log((n - 1) / (1.0 - threshold)) / (eta_w * epsilon))


def designated_convergence_run(
    n: int = 5,
    eta_w: float = 2.0,
    margin: float = 0.1,
    horizon: Optional[int] = None,
    loss_scale: float = 50.0,
):
    """Synthetic run satisfying the persistent-margin assumption by construction.

    Agent 0's individual prediction sits on the (stationary) target; every
    other agent's sits at a fixed offset costing `margin` per step. The graph
    is complete and static, reset and normalization are off, so the fusion
    weights follow the closed form exactly. Returns a RunResult whose logs
    feed the convergence audit.
    """
    from .commgraph import BaseGraph, CommSnapshot
    from .config import ScenarioConfig
    from .engine import AgentWeights, Message, learn, social_predict
    from .geometry import Vec2, loss as loss_fn
    from .harness import PreparedInputs, RunResult, StrategyRun

    if horizon is None:
        horizon = convergence_step_bound(n, eta_w, margin)
    points = [Vec2(0.0, 0.0)] + [Vec2(loss_scale * margin, 0.0)] * (n - 1)
    outcome = Vec2(0.0, 0.0)
    base = BaseGraph.complete(n)
    snap = CommSnapshot(0, n, base.edges)

    run = StrategyRun(
        strategy="d2eal", n=n, horizon=horizon,
        expert_loss=np.zeros((horizon + 1, n)), stale_loss=np.zeros((horizon + 1, n)),
        individual_loss=np.zeros((horizon + 1, n)), social_loss=np.zeros((horizon + 1, n)),
        alpha=np.full((horizon + 1, n), 0.5), w_self=np.ones((horizon + 1, n)),
        nrmcnt=np.zeros((horizon + 1, n), dtype=np.int64),
        w_rows=np.zeros((horizon + 1, n, n)),
    )
    weights = [AgentWeights() for _ in range(n)]
    prev_social = [points[i] for i in range(n)]
    for t in range(horizon + 1):
        if t > 0:
            for i in range(n):
                run.expert_loss[t, i] = loss_fn(points[i], outcome, loss_scale)
                run.individual_loss[t, i] = loss_fn(points[i], outcome, loss_scale)
                run.stale_loss[t, i] = loss_fn(prev_social[i], outcome, loss_scale)
                run.social_loss[t, i] = loss_fn(prev_social[i], outcome, loss_scale)
                weights[i] = learn(
                    weights[i], points[i], prev_social[i], points[i], outcome,
                    eta_w, eta_w, loss_scale,
                )
                run.w_self[t, i] = weights[i].w_hat_self
        msgs = [
            Message(i, points[i], points[i], weights[i].w_hat_self, weights[i].nrmcnt)
            for i in range(n)
        ]
        for i in range(n):
            inbox = [msgs[j] for j in range(n) if j != i]
            res = social_predict(msgs[i], inbox, snap, i)
            for sender, wv in res.weights:
                run.w_rows[t, i, sender] = wv
            prev_social[i] = res.f_social_1

    config = ScenarioConfig.model_validate(
        {
            "n": n, "horizon": horizon, "eta_w": eta_w, "eta_alpha": eta_w,
            "loss_scale": loss_scale, "topology": "complete", "link_drop_p": 0.0,
            "reset_enabled": False, "drift_reset_p": 0.0,
            "gamma": {"kind": "constant", "values": [0.0] * n},
        }
    )
    pre = PreparedInputs(
        seed=0,
        target=np.zeros((horizon + 2, 2)),
        drift_s=np.zeros((horizon + 1, n), dtype=np.int64),
        gam=np.zeros((horizon + 1, n)),
        sig2=np.zeros((horizon + 1, n)),
        pred1=np.zeros((horizon + 1, n, 2)),
        predtau=np.zeros((horizon + 1, n, 2)),
        kept=np.ones((horizon + 1, len(base.edges)), dtype=bool),
        drops=np.zeros(horizon + 1, dtype=np.int64),
        snapshots=[snap] * (horizon + 1),
        neighbor_mask=np.ones((horizon + 1, n, n), dtype=bool),
        delta=np.zeros(horizon + 2),
    )
    return RunResult(config=config, seed=0, pre=pre, run=run)
