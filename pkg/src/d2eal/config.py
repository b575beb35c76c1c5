"""Scenario configuration: a strict-schema JSON document validated with pydantic.

Unknown keys are rejected everywhere so a typo in a config file fails loudly
instead of silently running the default.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .commgraph import BaseGraph
from .engine import DEFAULT_NORM_DELTA, EngineParams
from .experts import GammaSchedule, benchmark_gamma_table
from .world import ControlParams, TargetInputSchedule


class ConfigError(ValueError):
    """Raised when a scenario configuration is structurally or semantically invalid."""


class ControlModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k1: float = 1.0
    k2: float = 2.0
    k3: float = 2.0
    d_s: float = 5.0
    v_max: float = 20.0
    w_max: float = 2.0

    def to_params(self) -> ControlParams:
        return ControlParams(self.k1, self.k2, self.k3, self.d_s, self.v_max, self.w_max)


class TargetModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["constant", "circle", "sinusoid", "waypoints"] = "sinusoid"
    speed: float = 5.0
    yaw_rate: float = 0.0
    yaw_amplitude: float = 0.3
    yaw_period: float = 40.0
    waypoints: list[tuple[float, float]] = Field(default_factory=list)
    waypoint_radius: float = 2.0
    turn_gain: float = 1.0

    def to_schedule(self) -> TargetInputSchedule:
        return TargetInputSchedule(
            kind=self.kind,
            speed=self.speed,
            yaw_rate=self.yaw_rate,
            yaw_amplitude=self.yaw_amplitude,
            yaw_period=self.yaw_period,
            waypoints=tuple(tuple(w) for w in self.waypoints),
            waypoint_radius=self.waypoint_radius,
            turn_gain=self.turn_gain,
        )


class GammaModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["table", "constant", "piecewise"] = "table"
    values: Optional[list[float]] = None  # constant: one gamma per robot
    bounds: Optional[list[float]] = None  # piecewise: ascending fractions ending at 1
    rows: Optional[list[list[float]]] = None  # piecewise: one row per segment

    def to_schedule(self, n: int) -> GammaSchedule:
        if self.kind == "table":
            table = benchmark_gamma_table()
            if n != table.n_robots:
                raise ConfigError(
                    f"gamma kind 'table' is defined for {table.n_robots} robots, got n={n}"
                )
            return table
        if self.kind == "constant":
            if self.values is None or len(self.values) != n:
                raise ConfigError("gamma kind 'constant' needs one value per robot")
            return GammaSchedule.constant(self.values)
        if self.bounds is None or self.rows is None:
            raise ConfigError("gamma kind 'piecewise' needs bounds and rows")
        if any(len(r) != n for r in self.rows):
            raise ConfigError("each gamma row must list one value per robot")
        try:
            return GammaSchedule(tuple(self.bounds), tuple(tuple(r) for r in self.rows))
        except ValueError as e:
            raise ConfigError(str(e)) from e


Topology = Union[Literal["path", "ring", "complete"], list[tuple[int, int]]]


class ScenarioConfig(BaseModel):
    """Full description of one simulation scenario."""

    model_config = ConfigDict(extra="forbid")

    n: int = 6
    horizon: int = 1400
    dt: float = 0.1
    tau: int = 1
    reset_period: int = 200
    eta_alpha: float = 2.0
    eta_w: float = 2.0
    drift_reset_p: float = 0.1
    link_drop_p: float = 0.1
    loss_scale: float = 50.0
    gamma: GammaModel = Field(default_factory=GammaModel)
    topology: Topology = "path"
    control: ControlModel = Field(default_factory=ControlModel)
    target: TargetModel = Field(default_factory=TargetModel)
    fusion: Literal[
        "d2eal", "nocomm", "mean", "median", "greedy", "kf", "ci", "bf", "cu"
    ] = "d2eal"
    seed: int = 1
    num_runs: int = 100

    # behavior switches (defaults reproduce the benchmark scenario)
    reset_enabled: bool = True
    normalization_enabled: bool = True
    norm_delta: float = DEFAULT_NORM_DELTA
    shared_drift_clock: bool = False
    ci_exact: bool = False
    cu_exact_mean: bool = False
    cu_mean_rule: Literal["balanced", "midpoint", "grid"] = "balanced"
    motion_enabled: bool = True
    reliability_cost_scale: float = 1.0

    @model_validator(mode="after")
    def _check(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.reset_period < 1:
            raise ValueError("reset_period must be >= 1")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.eta_alpha <= 0 or self.eta_w <= 0:
            raise ValueError("learning rates must be positive")
        for name in ("drift_reset_p", "link_drop_p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.loss_scale <= 0:
            raise ValueError("loss_scale must be positive")
        if self.num_runs < 1:
            raise ValueError("num_runs must be >= 1")
        return self

    def base_graph(self) -> BaseGraph:
        try:
            return BaseGraph.from_config(self.topology, self.n)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def gamma_schedule(self) -> GammaSchedule:
        return self.gamma.to_schedule(self.n)

    def control_params(self) -> ControlParams:
        try:
            return self.control.to_params()
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def target_schedule(self) -> TargetInputSchedule:
        return self.target.to_schedule()

    def effective_cu_mean_rule(self) -> str:
        """The covariance-union mean rule, honoring the exact-mean switch."""
        return "grid" if self.cu_exact_mean else self.cu_mean_rule

    def engine_params(self) -> EngineParams:
        return EngineParams(
            eta_alpha=self.eta_alpha,
            eta_w=self.eta_w,
            loss_scale=self.loss_scale,
            reset_period=self.reset_period,
            reset_enabled=self.reset_enabled,
            norm_delta=self.norm_delta,
            normalization_enabled=self.normalization_enabled,
        )


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {p} is not valid JSON: {e}") from e
    return parse_config(raw)


def parse_config(raw: dict) -> ScenarioConfig:
    try:
        cfg = ScenarioConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
    # fail fast on cross-field problems
    cfg.base_graph()
    cfg.gamma_schedule()
    cfg.control_params()
    return cfg


def benchmark_scenario(**overrides) -> ScenarioConfig:
    """The six-robot benchmark scenario with its reference parameters."""
    base = dict(
        n=6, horizon=1400, dt=0.1, tau=1, reset_period=200,
        eta_alpha=2.0, eta_w=2.0, drift_reset_p=0.1, link_drop_p=0.1,
        loss_scale=50.0, topology="path", fusion="d2eal", seed=1, num_runs=100,
    )
    base.update(overrides)
    return ScenarioConfig.model_validate(base)
