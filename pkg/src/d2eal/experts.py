"""Synthetic look-ahead predictors: truth plus resetting linear drift plus Gaussian noise.

The declared covariance of a prediction covers only the noise term; the drift
is an unmodeled bias, which is exactly what the covariance-based fusers never
get to see.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .geometry import Mat2, Vec2, mat2_scaled_identity


class InvalidProbability(ValueError):
    """Raised when a probability parameter lies outside [0, 1]."""


class DriftState(NamedTuple):
    """Steps the drift has sustained since its last stochastic reset."""

    s: int = 0


class ExpertPrediction(NamedTuple):
    mean: Vec2
    cov: Mat2  # declared noise covariance (10*gamma)^2 I; excludes drift
    robot_id: int
    lookahead: int


@dataclass(frozen=True)
class GammaSchedule:
    """Piecewise-constant drift/noise proportionality per robot.

    `bounds` are fractions of the horizon splitting [0, 1] into len(bounds)
    left-closed right-open segments (the last is closed); `gammas[seg][i]` is
    robot i's value on that segment. Single-segment schedules are constants.
    """

    bounds: tuple[float, ...]
    gammas: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.bounds) != len(self.gammas):
            raise ValueError("one gamma row per segment bound required")
        if list(self.bounds) != sorted(self.bounds) or self.bounds[-1] != 1.0:
            raise ValueError("segment bounds must be ascending and end at 1.0")
        n = len(self.gammas[0])
        for row in self.gammas:
            if len(row) != n:
                raise ValueError("gamma rows must all cover the same robots")
            if any(g < 0.0 for g in row):
                raise ValueError("gamma values must be nonnegative")

    @property
    def n_robots(self) -> int:
        return len(self.gammas[0])

    def value(self, t: int, robot: int, horizon: int) -> float:
        frac = t / horizon if horizon > 0 else 0.0
        for bound, row in zip(self.bounds, self.gammas):
            if frac < bound:
                return row[robot]
        return self.gammas[-1][robot]

    @staticmethod
    def constant(gammas: Sequence[float]) -> "GammaSchedule":
        return GammaSchedule((1.0,), (tuple(float(g) for g in gammas),))


def benchmark_gamma_table() -> GammaSchedule:
    """The six-robot benchmark schedule: robot 1 degrades over time, robot 6 improves."""
    return GammaSchedule(
        bounds=(1 / 6, 1 / 3, 1 / 2, 5 / 6, 1.0),
        gammas=(
            (0.01, 0.1, 0.1, 0.2, 0.4, 0.8),
            (0.01, 0.1, 0.2, 0.1, 0.3, 0.6),
            (0.3, 0.3, 0.4, 0.05, 0.3, 0.3),
            (0.6, 0.3, 0.2, 0.2, 0.3, 0.01),
            (0.8, 0.3, 0.2, 0.2, 0.1, 0.01),
        ),
    )


def advance_drift(drift: DriftState, p: float, rng) -> DriftState:
    """s -> s+1 with probability 1-p, else reset to 0."""
    if not 0.0 <= p <= 1.0:
        raise InvalidProbability(f"drift reset probability must be in [0,1], got {p}")
    if float(rng.random()) < p:
        return DriftState(0)
    return DriftState(drift.s + 1)


def predict_from_normals(
    true_future: Vec2, gamma: float, s: int, z0: float, z1: float,
    robot_id: int, lookahead: int,
) -> ExpertPrediction:
    """Prediction mean truth + gamma*s*[1,1] + 10*gamma*z, cov (10*gamma)^2 I."""
    bias = gamma * s
    sigma = 10.0 * gamma
    mean = Vec2(true_future[0] + bias + sigma * z0, true_future[1] + bias + sigma * z1)
    return ExpertPrediction(mean, mat2_scaled_identity(sigma * sigma), robot_id, lookahead)


def predict(
    true_future: Vec2,
    robot_id: int,
    t: int,
    drift: DriftState,
    sched: GammaSchedule,
    rng,
    horizon: int,
    lookahead: int = 1,
) -> ExpertPrediction:
    gamma = sched.value(t, robot_id, horizon)
    z = rng.standard_normal(2)
    return predict_from_normals(
        true_future, gamma, drift.s, float(z[0]), float(z[1]), robot_id, lookahead
    )


def expert_divergence_bound(predictions: Sequence[ExpertPrediction]) -> float:
    """Max pairwise distance between prediction means: the tightest divergence bound."""
    if len(predictions) < 2:
        raise ValueError("divergence bound needs at least two predictions")
    t0 = predictions[0].lookahead
    if any(p.lookahead != t0 for p in predictions):
        raise ValueError("predictions must share the same lookahead")
    best = 0.0
    for i in range(len(predictions)):
        xi, yi = predictions[i].mean
        for j in range(i + 1, len(predictions)):
            xj, yj = predictions[j].mean
            d = math.hypot(xi - xj, yi - yj)
            if d > best:
                best = d
    return best
