"""Per-agent online-learning fusion: individual prediction, message exchange,
social fusion, exponential-weight updates, periodic reset, and the
decentralized weight-normalization scheme.

Each step runs two phases. Phase 1 (learn + individual predict) uses only
local state and produces the outgoing message; all agents' phase 1 must
complete before phase 2 (social fusion over the received messages). Fusion
sums accumulate in ascending agent-id order so a parallel driver reproduces
the sequential result bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .commgraph import CommSnapshot
from .geometry import Vec2, loss

FLAG_WEIGHT_COLLAPSE = "WeightCollapse"

# Default rescale threshold: near the smallest normal double, with margin.
DEFAULT_NORM_DELTA = 1e-300


@dataclass(frozen=True)
class EngineParams:
    eta_alpha: float = 2.0
    eta_w: float = 2.0
    loss_scale: float = 50.0
    reset_period: int = 200
    reset_enabled: bool = True
    norm_delta: float = DEFAULT_NORM_DELTA
    normalization_enabled: bool = True

    def __post_init__(self):
        if self.eta_alpha <= 0.0 or self.eta_w <= 0.0:
            raise ValueError("learning rates must be positive")
        if self.reset_period < 1:
            raise ValueError("reset period must be >= 1")


@dataclass(slots=True)
class AgentWeights:
    """Learned weights; all start at 1. Counters track rescales of tiny values."""

    alpha_hat: float = 1.0
    alpha_hat_prime: float = 1.0
    w_hat_self: float = 1.0
    nrmcnt: int = 0
    alpha_cnt: int = 0
    alpha_prime_cnt: int = 0


class Message(NamedTuple):
    """Tuple broadcast to neighbors each step."""

    sender: int
    f_individual_1: Vec2
    f_individual_tau: Vec2
    w_hat_self: float
    nrmcnt: int


@dataclass(slots=True)
class AgentPredictions:
    """Rolling prediction memory for one agent.

    social_prev / social_prev2 hold the one-step social predictions from the
    previous two iterations (needed for the loss feedback); social_tau_prev
    holds the previous iteration's lookahead social prediction, which is the
    pipeline slot the lookahead individual prediction blends against.
    """

    last_expert_1: Vec2 = Vec2(0.0, 0.0)
    last_individual_1: Vec2 = Vec2(0.0, 0.0)
    social_prev: Vec2 = Vec2(0.0, 0.0)
    social_prev2: Vec2 = Vec2(0.0, 0.0)
    social_tau_prev: Vec2 = Vec2(0.0, 0.0)
    initialized: bool = False


@dataclass(slots=True)
class AgentState:
    agent_id: int
    weights: AgentWeights = field(default_factory=AgentWeights)
    predictions: AgentPredictions = field(default_factory=AgentPredictions)


class StepLosses(NamedTuple):
    expert: float
    stale_social: float
    individual: float
    social: float


def alpha_value(weights: AgentWeights) -> float:
    """alpha = alpha_hat / (alpha_hat + alpha_hat'), reconciling rescale counters.

    A branch that has been rescaled more often is smaller by a huge factor, so
    it contributes zero against the branch with the minimal counter.
    """
    m = min(weights.alpha_cnt, weights.alpha_prime_cnt)
    a = weights.alpha_hat if weights.alpha_cnt == m else 0.0
    ap = weights.alpha_hat_prime if weights.alpha_prime_cnt == m else 0.0
    total = a + ap
    if total <= 0.0:
        return 0.5
    return a / total


def individual_predict(weights: AgentWeights, f_expert_1: Vec2, f_social_prev: Vec2) -> Vec2:
    """Convex blend of the own expert's prediction and the previous social prediction."""
    a = alpha_value(weights)
    return Vec2(
        a * f_expert_1[0] + (1.0 - a) * f_social_prev[0],
        a * f_expert_1[1] + (1.0 - a) * f_social_prev[1],
    )


def individual_predict_tau(
    weights: AgentWeights, f_expert_tau: Vec2, f_social_prev_tau: Vec2
) -> Vec2:
    """Same convex blend applied to the lookahead pipeline slot."""
    return individual_predict(weights, f_expert_tau, f_social_prev_tau)


def learn_from_losses(
    weights: AgentWeights,
    l_expert: float,
    l_stale_social: float,
    l_individual: float,
    eta_alpha: float,
    eta_w: float,
) -> AgentWeights:
    return AgentWeights(
        alpha_hat=weights.alpha_hat * math.exp(-eta_alpha * l_expert),
        alpha_hat_prime=weights.alpha_hat_prime * math.exp(-eta_alpha * l_stale_social),
        w_hat_self=weights.w_hat_self * math.exp(-eta_w * l_individual),
        nrmcnt=weights.nrmcnt,
        alpha_cnt=weights.alpha_cnt,
        alpha_prime_cnt=weights.alpha_prime_cnt,
    )


def learn(
    weights: AgentWeights,
    f_expert_1_prev: Vec2,
    f_social_prev: Vec2,
    f_individual_prev: Vec2,
    outcome: Vec2,
    eta_alpha: float,
    eta_w: float,
    loss_scale: float,
) -> AgentWeights:
    """Multiplicative exponential-weight updates from the three realized losses."""
    l_exp = loss(f_expert_1_prev, outcome, loss_scale)
    l_stale = loss(f_social_prev, outcome, loss_scale)
    l_ind = loss(f_individual_prev, outcome, loss_scale)
    return learn_from_losses(weights, l_exp, l_stale, l_ind, eta_alpha, eta_w)


def periodic_reset(weights: AgentWeights, t: int, reset_period: int) -> AgentWeights:
    """Re-initialize every reset_period steps to shed accumulated bias."""
    if reset_period < 1:
        raise ValueError("reset period must be >= 1")
    if t > 0 and t % reset_period == 0:
        return AgentWeights()
    return weights


def rescale_if_tiny(weights: AgentWeights, delta: float) -> AgentWeights:
    """Divide any weight at or below delta by delta, bumping its counter."""
    if (
        weights.alpha_hat > delta
        and weights.alpha_hat_prime > delta
        and weights.w_hat_self > delta
    ):
        return weights
    a, ap, w = weights.alpha_hat, weights.alpha_hat_prime, weights.w_hat_self
    ca, cap, cw = weights.alpha_cnt, weights.alpha_prime_cnt, weights.nrmcnt
    if a <= delta:
        a /= delta
        ca += 1
    if ap <= delta:
        ap /= delta
        cap += 1
    if w <= delta:
        w /= delta
        cw += 1
    return AgentWeights(a, ap, w, cw, ca, cap)


def normalize_weights(
    weights: AgentWeights, inbox_counters: Sequence[int], delta: float = DEFAULT_NORM_DELTA
) -> tuple[AgentWeights, tuple[bool, ...]]:
    """Self-rescale plus the counter exclusion mask over [own] + inbox.

    Members whose rescale counter exceeds the neighborhood minimum carry
    weights that are astronomically smaller in true value, so they are
    discarded from the fusion (mask entry True).
    """
    rescaled = rescale_if_tiny(weights, delta)
    counters = [rescaled.nrmcnt, *inbox_counters]
    m = min(counters)
    return rescaled, tuple(c > m for c in counters)


class SocialResult(NamedTuple):
    f_social_1: Vec2
    f_social_tau: Vec2
    weights: tuple[tuple[int, float], ...]  # (sender, w) ascending by sender
    flag: Optional[str]


def social_predict(
    own: Message,
    inbox: Sequence[Message],
    snapshot: Optional[CommSnapshot],
    i: int,
) -> SocialResult:
    """Fuse the neighborhood's individual predictions with normalized weights."""
    if snapshot is not None:
        expected = set(snapshot.neighbors[i])
        got = {m.sender for m in inbox}
        if got != expected:
            raise ValueError(f"inbox senders {got} do not match neighbors {expected}")
    members = sorted([own, *inbox], key=lambda m: m.sender)
    min_cnt = min(m.nrmcnt for m in members)
    total = 0.0
    for m in members:
        if m.nrmcnt == min_cnt:
            total += m.w_hat_self
    flag = None
    if total <= 0.0:
        # all usable weights vanished; fall back to uniform over the neighborhood
        flag = FLAG_WEIGHT_COLLAPSE
        u = 1.0 / len(members)
        pairs = tuple((m.sender, u) for m in members)
    else:
        pairs = tuple(
            (m.sender, (m.w_hat_self / total) if m.nrmcnt == min_cnt else 0.0)
            for m in members
        )
    fx1 = fy1 = fxt = fyt = 0.0
    for (sender, w), m in zip(pairs, members):
        fx1 += w * m.f_individual_1[0]
        fy1 += w * m.f_individual_1[1]
        fxt += w * m.f_individual_tau[0]
        fyt += w * m.f_individual_tau[1]
    return SocialResult(Vec2(fx1, fy1), Vec2(fxt, fyt), pairs, flag)


def phase1(
    state: AgentState,
    f_expert_1: Vec2,
    f_expert_tau: Vec2,
    outcome: Optional[Vec2],
    t: int,
    params: EngineParams,
) -> tuple[Message, Optional[StepLosses], float]:
    """Observe/learn, reset, normalize, form individual predictions, emit message."""
    w = state.weights
    pred = state.predictions
    losses: Optional[StepLosses] = None
    if t > 0 and outcome is not None:
        losses = StepLosses(
            expert=loss(pred.last_expert_1, outcome, params.loss_scale),
            stale_social=loss(pred.social_prev2, outcome, params.loss_scale),
            individual=loss(pred.last_individual_1, outcome, params.loss_scale),
            social=loss(pred.social_prev, outcome, params.loss_scale),
        )
        w = learn_from_losses(
            w, losses.expert, losses.stale_social, losses.individual,
            params.eta_alpha, params.eta_w,
        )
    if params.reset_enabled:
        w = periodic_reset(w, t, params.reset_period)
    if params.normalization_enabled:
        w = rescale_if_tiny(w, params.norm_delta)
    state.weights = w

    if not pred.initialized:
        pred.social_prev = f_expert_1
        pred.social_prev2 = f_expert_1
        pred.social_tau_prev = f_expert_tau
        pred.initialized = True

    a = alpha_value(w)
    f_ind_1 = individual_predict(w, f_expert_1, pred.social_prev)
    f_ind_tau = individual_predict_tau(w, f_expert_tau, pred.social_tau_prev)
    pred.last_expert_1 = f_expert_1
    pred.last_individual_1 = f_ind_1
    msg = Message(state.agent_id, f_ind_1, f_ind_tau, w.w_hat_self, w.nrmcnt)
    return msg, losses, a


def phase2(
    state: AgentState,
    own: Message,
    inbox: Sequence[Message],
    snapshot: Optional[CommSnapshot] = None,
) -> SocialResult:
    """Social fusion, then shift the prediction memory forward one step."""
    result = social_predict(own, inbox, snapshot, state.agent_id)
    pred = state.predictions
    pred.social_prev2 = pred.social_prev
    pred.social_prev = result.f_social_1
    pred.social_tau_prev = result.f_social_tau
    return result


def agent_step(
    state: AgentState,
    f_expert_1: Vec2,
    f_expert_tau: Vec2,
    inbox: Sequence[Message],
    outcome: Optional[Vec2],
    t: int,
    params: EngineParams,
    snapshot: Optional[CommSnapshot] = None,
) -> tuple[Message, SocialResult, Optional[StepLosses], float]:
    """One full iteration for a single agent, given the neighbors' messages.

    The inbox must hold the neighbors' phase-1 messages for this same step; a
    driver therefore runs phase 1 for every agent before any phase 2.
    """
    msg, losses, a = phase1(state, f_expert_1, f_expert_tau, outcome, t, params)
    result = phase2(state, msg, inbox, snapshot)
    return msg, result, losses, a
